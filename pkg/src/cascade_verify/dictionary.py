"""Epistemological classification dictionary.

Every annotation is classified along four independent dimensions: purpose,
knowledge domain, scale and (optionally) method.  The dictionary is kept as a
YAML file so domain experts can extend it without touching code.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Mapping, Optional

import yaml

from .errors import (
    DomainPurposeMismatch,
    DuplicateAnnotation,
    SchemaError,
    UnknownDimensionValue,
)


class Dimension(str, enum.Enum):
    PURPOSE = "purpose"
    KNOWLEDGE_DOMAIN = "knowledge_domain"
    SCALE = "scale"
    METHOD = "method"

    @classmethod
    def from_name(cls, name: str) -> "Dimension":
        return cls(name)


_QUOTES = ("'", '"')
_SPACES = re.compile(r"\s+")


def _normalize_once(text: str) -> str:
    text = text.strip()
    while len(text) >= 2 and text[0] == text[-1] and text[0] in _QUOTES:
        text = text[1:-1].strip()
    text = text.lower().replace("_", " ").replace(",", " ")
    return _SPACES.sub(" ", text).strip()


def normalize_label(raw: str) -> str:
    """Fold a classification label to its comparison form.

    Case, surrounding quotes, underscores and commas are ignored, so
    ``"Variant_in_Transcript"`` and ``variant in transcript`` compare equal.
    """
    text = raw
    while True:
        folded = _normalize_once(text)
        if folded == text:
            return folded
        text = folded


PURPOSES = ("phenotype", "provenance", "evidence")
KNOWLEDGE_DOMAINS = {
    "evidence": (
        "Human Genetics",
        "Animal Genetics",
        "Population Genetics",
        "Functional Genetics",
        "Epigenetics",
    ),
    "provenance": ("Call Annotations",),
    "phenotype": ("Phenotypic Data", "Inheritance Mode"),
}
SCALES = ("variant", "position", "transcript", "variant_in_transcript", "gene", "window")
METHODS = (
    "Clinical Evidence",
    "Statistical Genetics Evidence",
    "Bioinformatics Inference",
    "Experimental, in Vivo",
    "Experimental, in Vitro",
    "Experimental, Other",
)


@dataclass(frozen=True)
class Vocabularies:
    """Legal values per dimension, all in normalized form."""

    purposes: frozenset
    domains_by_purpose: Mapping[str, frozenset]
    scales: frozenset
    methods: frozenset

    @classmethod
    def builtin(cls) -> "Vocabularies":
        return cls(
            purposes=frozenset(map(normalize_label, PURPOSES)),
            domains_by_purpose={
                normalize_label(p): frozenset(map(normalize_label, ds))
                for p, ds in KNOWLEDGE_DOMAINS.items()
            },
            scales=frozenset(map(normalize_label, SCALES)),
            methods=frozenset(map(normalize_label, METHODS)),
        )

    @property
    def knowledge_domains(self) -> frozenset:
        return frozenset().union(*self.domains_by_purpose.values())


@dataclass(frozen=True)
class ClassificationEntry:
    annotation: str
    purpose: str
    knowledge_domain: str
    scale: str
    method: Optional[str] = None
    # labels as written in the source file, used for reports
    labels: Mapping[str, str] = field(default_factory=dict, compare=False)

    @classmethod
    def create(
        cls,
        annotation: str,
        purpose: str,
        knowledge_domain: str,
        scale: str,
        method: Optional[str] = None,
    ) -> "ClassificationEntry":
        raw = {"purpose": purpose, "knowledge_domain": knowledge_domain, "scale": scale}
        if method is not None:
            raw["method"] = method
        return cls(
            annotation,
            normalize_label(purpose),
            normalize_label(knowledge_domain),
            normalize_label(scale),
            None if method is None else normalize_label(method),
            labels=raw,
        )

    def get(self, dimension: Dimension) -> Optional[str]:
        return getattr(self, Dimension(dimension).value)

    def display(self, dimension: Dimension) -> Optional[str]:
        dim = Dimension(dimension).value
        return self.labels.get(dim, getattr(self, dim))


@dataclass(frozen=True)
class ClassificationDictionary:
    entries: Mapping[str, ClassificationEntry] = field(default_factory=dict)
    vocabularies: Vocabularies = field(default_factory=Vocabularies.builtin)

    def __contains__(self, annotation: str) -> bool:
        return annotation in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def entry(self, annotation: str) -> Optional[ClassificationEntry]:
        return self.entries.get(annotation)


def classify(dictionary: ClassificationDictionary, annotation: str, dimension: Dimension):
    """Normalized classification of ``annotation`` along ``dimension``, or None."""
    entry = dictionary.entries.get(annotation)
    if entry is None:
        return None
    return entry.get(dimension)


@dataclass(frozen=True)
class DictionaryDiagnostic:
    kind: str
    annotation: str
    message: str
    dimension: Optional[str] = None
    value: Optional[str] = None

    def to_exception(self) -> Exception:
        if self.kind == "DuplicateAnnotation":
            return DuplicateAnnotation(self.annotation)
        if self.kind == "DomainPurposeMismatch":
            return DomainPurposeMismatch(self.annotation, self.dimension or "", self.value or "")
        return UnknownDimensionValue(self.annotation, self.dimension or "", self.value or "")


def check_dictionary(dictionary: ClassificationDictionary) -> list[DictionaryDiagnostic]:
    """Return every vocabulary or purpose/domain violation, in annotation order."""
    vocab = dictionary.vocabularies
    found = []
    for name, entry in dictionary.entries.items():
        allowed = (
            (Dimension.PURPOSE, vocab.purposes),
            (Dimension.KNOWLEDGE_DOMAIN, vocab.knowledge_domains),
            (Dimension.SCALE, vocab.scales),
            (Dimension.METHOD, vocab.methods),
        )
        unknown = False
        for dim, legal in allowed:
            value = entry.get(dim)
            if value is None and dim is Dimension.METHOD:
                continue
            if value not in legal:
                unknown = True
                found.append(
                    DictionaryDiagnostic(
                        "UnknownDimensionValue",
                        name,
                        f"{name}: {entry.display(dim)!r} is not a known {dim.value} value",
                        dim.value,
                        entry.display(dim),
                    )
                )
        if unknown:
            continue
        if entry.knowledge_domain not in vocab.domains_by_purpose.get(entry.purpose, ()):
            found.append(
                DictionaryDiagnostic(
                    "DomainPurposeMismatch",
                    name,
                    f"{name}: knowledge domain {entry.display(Dimension.KNOWLEDGE_DOMAIN)!r} "
                    f"is not legal for purpose {entry.display(Dimension.PURPOSE)!r}",
                    entry.display(Dimension.PURPOSE),
                    entry.display(Dimension.KNOWLEDGE_DOMAIN),
                )
            )
    return found


# -- YAML loading ------------------------------------------------------------


class _DuplicateKey(Exception):
    def __init__(self, key, line):
        super().__init__(key, line)
        self.key = key
        self.line = line


class _StrictLoader(yaml.SafeLoader):
    def construct_mapping(self, node, deep=False):
        seen = set()
        for key_node, _ in node.value:
            key = self.construct_object(key_node, deep=True)
            if key in seen:
                raise _DuplicateKey(key, key_node.start_mark.line + 1)
            seen.add(key)
        return super().construct_mapping(node, deep=deep)


_ENTRY_FIELDS = {"purpose", "knowledge_domain", "scale", "method"}
_VOCAB_FIELDS = {"extends", "purpose", "knowledge_domain", "scale", "method"}


def _compose_without_duplicates(text: str):
    """Compose the YAML tree, dropping repeated ``annotations`` entries.

    Returns the root node and the repeated names in file order; the first
    entry for each name is kept.
    """
    root = yaml.compose(text, Loader=yaml.SafeLoader)
    dups: list[str] = []
    if not isinstance(root, yaml.MappingNode):
        return root, dups
    for key_node, value_node in root.value:
        if getattr(key_node, "value", None) != "annotations":
            continue
        if not isinstance(value_node, yaml.MappingNode):
            continue
        seen = set()
        kept = []
        for name_node, entry_node in value_node.value:
            name = name_node.value
            if name in seen:
                if name not in dups:
                    dups.append(name)
                continue
            seen.add(name)
            kept.append((name_node, entry_node))
        value_node.value = kept
    return root, dups


def _string_list(value, where: str) -> list[str]:
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise SchemaError(f"{where} must be a list of strings")
    return value


def _read_vocabularies(spec) -> Vocabularies:
    base = Vocabularies.builtin()
    if spec is None:
        return base
    if not isinstance(spec, dict):
        raise SchemaError("vocabularies must be a mapping")
    unknown = set(spec) - _VOCAB_FIELDS
    if unknown:
        raise SchemaError(f"unknown vocabularies field(s): {', '.join(sorted(map(str, unknown)))}")
    extends = spec.get("extends", False)
    if not isinstance(extends, bool):
        raise SchemaError("vocabularies.extends must be true or false")

    purposes = set(base.purposes)
    scales = set(base.scales)
    methods = set(base.methods)
    domains = {p: set(ds) for p, ds in base.domains_by_purpose.items()}

    for label in _string_list(spec.get("purpose", []), "vocabularies.purpose"):
        value = normalize_label(label)
        if value not in purposes and not extends:
            raise SchemaError(f"new purpose {label!r} requires 'extends: true'")
        purposes.add(value)
        domains.setdefault(value, set())
    for label in _string_list(spec.get("scale", []), "vocabularies.scale"):
        value = normalize_label(label)
        if value not in scales and not extends:
            raise SchemaError(f"new scale {label!r} requires 'extends: true'")
        scales.add(value)
    for label in _string_list(spec.get("method", []), "vocabularies.method"):
        methods.add(normalize_label(label))

    kd = spec.get("knowledge_domain", {})
    if not isinstance(kd, dict):
        raise SchemaError("vocabularies.knowledge_domain must map purpose to a list")
    for purpose_label, labels in kd.items():
        purpose = normalize_label(str(purpose_label))
        if purpose not in purposes:
            raise SchemaError(f"knowledge_domain list for unknown purpose {purpose_label!r}")
        where = f"vocabularies.knowledge_domain.{purpose_label}"
        domains[purpose].update(map(normalize_label, _string_list(labels, where)))

    return Vocabularies(
        purposes=frozenset(purposes),
        domains_by_purpose={p: frozenset(ds) for p, ds in domains.items()},
        scales=frozenset(scales),
        methods=frozenset(methods),
    )


def _read_entry(name: str, spec) -> ClassificationEntry:
    if not isinstance(spec, dict):
        raise SchemaError(f"annotation {name!r} must map to a classification")
    unknown = set(spec) - _ENTRY_FIELDS
    if unknown:
        raise SchemaError(f"annotation {name!r}: unknown field(s) {', '.join(sorted(map(str, unknown)))}")
    for required in ("purpose", "knowledge_domain", "scale"):
        if not isinstance(spec.get(required), str):
            raise SchemaError(f"annotation {name!r}: {required} is required and must be text")
    method = spec.get("method")
    if method is not None and not isinstance(method, str):
        raise SchemaError(f"annotation {name!r}: method must be text")
    return ClassificationEntry.create(
        name, spec["purpose"], spec["knowledge_domain"], spec["scale"], method
    )


def read_dictionary(config_text: str) -> tuple[ClassificationDictionary, list[DictionaryDiagnostic]]:
    """Parse a dictionary, returning it together with every problem found.

    Repeated annotations are reported and only their first entry is kept.
    Structural problems raise ``SchemaError``.
    """
    try:
        root, dups = _compose_without_duplicates(config_text)
        data = None if root is None else _StrictLoader("").construct_document(root)
    except _DuplicateKey as exc:
        raise SchemaError(f"duplicate key {exc.key!r} at line {exc.line}") from None
    except yaml.YAMLError as exc:
        raise SchemaError(f"invalid YAML: {exc}") from None

    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise SchemaError("dictionary file must be a mapping")
    unknown = set(data) - {"vocabularies", "annotations"}
    if unknown:
        raise SchemaError(f"unknown top-level field(s): {', '.join(sorted(map(str, unknown)))}")

    vocabularies = _read_vocabularies(data.get("vocabularies"))
    annotations = data.get("annotations")
    if annotations is None:
        annotations = {}
    if not isinstance(annotations, dict):
        raise SchemaError("annotations must be a mapping")
    entries = {}
    for name, spec in annotations.items():
        if not isinstance(name, str):
            raise SchemaError(f"annotation name {name!r} must be text")
        entries[name] = _read_entry(name, spec)

    dictionary = ClassificationDictionary(entries, vocabularies)
    diagnostics = [
        DictionaryDiagnostic("DuplicateAnnotation", name, f"{name}: classified more than once")
        for name in dups
    ]
    return dictionary, diagnostics + check_dictionary(dictionary)


def load_dictionary(config_text: str) -> ClassificationDictionary:
    """Parse and check a dictionary, raising on the first problem."""
    dictionary, diagnostics = read_dictionary(config_text)
    if diagnostics:
        raise diagnostics[0].to_exception()
    return dictionary


def sample_dictionary_text() -> str:
    return resources.files("cascade_verify").joinpath("data/sample_dictionary.yaml").read_text("utf-8")


def load_sample_dictionary() -> ClassificationDictionary:
    return load_dictionary(sample_dictionary_text())
