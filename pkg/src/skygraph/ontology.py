"""Taxonomies of cloud resources, frameworks, functionalities and security
features, plus the per-provider type mappings that classify inventory
resources into abstract classes.

The ontology is immutable after loading and safe to share between threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from skygraph.errors import OntologyError, UnknownClassError, UnknownMappingError

CLASS_KINDS = ("resource", "framework", "functionality", "security-feature")
PROPERTY_KINDS = ("string", "boolean", "integer")

_CLASS_KEYS = {"name", "parent", "kind", "data_properties", "offers"}
_TOP_KEYS = {"classes", "mappings"}
_MAPPING_DOC_KEYS = {"provider", "types"}
_MAPPING_ENTRY_KEYS = {"provider_type", "ontology_class"}


@dataclass(frozen=True)
class OntologyClass:
    name: str
    kind: str
    parent: str | None = None
    data_properties: tuple[tuple[str, str], ...] = ()
    offers: tuple[str, ...] = ()


@dataclass(frozen=True)
class InstanceMapping:
    provider: str
    provider_type: str
    ontology_class: str


@dataclass
class Ontology:
    """Validated class hierarchy plus provider instance mappings."""

    classes: dict[str, OntologyClass]
    mappings: list[InstanceMapping]
    _children: dict[str, list[str]] = field(default_factory=dict, repr=False)
    _mapping_index: dict[tuple[str, str], str] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        self._validate()
        self._children = {name: [] for name in self.classes}
        for cls in self.classes.values():
            if cls.parent is not None:
                self._children[cls.parent].append(cls.name)
        self._mapping_index = {
            (m.provider, m.provider_type): m.ontology_class for m in self.mappings
        }

    # -- validation ----------------------------------------------------

    def _validate(self) -> None:
        for cls in self.classes.values():
            if cls.kind not in CLASS_KINDS:
                raise OntologyError(f"class {cls.name!r} has unknown kind {cls.kind!r}")
            if cls.parent is not None:
                parent = self.classes.get(cls.parent)
                if parent is None:
                    raise OntologyError(
                        f"class {cls.name!r} references unknown parent {cls.parent!r}"
                    )
                if parent.kind != cls.kind:
                    raise OntologyError(
                        f"class {cls.name!r} ({cls.kind}) has parent of kind {parent.kind!r}"
                    )
            for offered in cls.offers:
                target = self.classes.get(offered)
                if target is None:
                    raise OntologyError(
                        f"class {cls.name!r} offers unknown class {offered!r}"
                    )
                if target.kind not in ("functionality", "security-feature"):
                    raise OntologyError(
                        f"class {cls.name!r} offers {offered!r} of kind {target.kind!r}"
                    )
        self._check_cycles()
        for m in self.mappings:
            cls = self.classes.get(m.ontology_class)
            if cls is None:
                raise OntologyError(
                    f"mapping {m.provider}/{m.provider_type} references unknown "
                    f"class {m.ontology_class!r}"
                )
            if cls.kind != "resource":
                raise OntologyError(
                    f"mapping {m.provider}/{m.provider_type} targets non-resource "
                    f"class {m.ontology_class!r}"
                )
        seen: set[tuple[str, str]] = set()
        for m in self.mappings:
            key = (m.provider, m.provider_type)
            if key in seen:
                raise OntologyError(
                    f"duplicate mapping for provider {m.provider!r} "
                    f"type {m.provider_type!r}"
                )
            seen.add(key)

    def _check_cycles(self) -> None:
        for name in self.classes:
            seen = {name}
            cur = self.classes[name].parent
            while cur is not None:
                if cur in seen:
                    raise OntologyError(f"inheritance cycle through class {cur!r}")
                seen.add(cur)
                cur = self.classes[cur].parent

    # -- reasoning -----------------------------------------------------

    def has_class(self, name: str) -> bool:
        return name in self.classes

    def _require(self, name: str) -> OntologyClass:
        cls = self.classes.get(name)
        if cls is None:
            raise UnknownClassError(f"unknown ontology class {name!r}")
        return cls

    def ancestry(self, name: str) -> list[str]:
        """Chain from the root down to `name` itself (ancestor-first)."""
        chain = []
        cur: str | None = self._require(name).name
        while cur is not None:
            chain.append(cur)
            cur = self.classes[cur].parent
        chain.reverse()
        return chain

    def is_subclass(self, child: str, ancestor: str) -> bool:
        """True iff `ancestor` is reachable from `child` by parent links.

        Reflexive: every class is a subclass of itself.
        """
        self._require(ancestor)
        cur: str | None = self._require(child).name
        while cur is not None:
            if cur == ancestor:
                return True
            cur = self.classes[cur].parent
        return False

    def descendants(self, name: str) -> set[str]:
        """`name` plus every class that inherits from it."""
        self._require(name)
        out: set[str] = set()
        stack = [name]
        while stack:
            cur = stack.pop()
            out.add(cur)
            stack.extend(self._children[cur])
        return out

    def resolve_instance_class(self, provider: str, provider_type: str) -> str:
        """Classify a provider-specific resource type, e.g. an AWS EC2
        Volume into BlockStorage."""
        cls = self._mapping_index.get((provider, provider_type))
        if cls is None:
            raise UnknownMappingError(provider, provider_type)
        return cls

    def offered_features(self, class_name: str) -> list[str]:
        """Union of `offers` over the class and its ancestors.

        Deduplicated; ancestor declarations come first so downstream
        node construction is reproducible.
        """
        out: list[str] = []
        seen: set[str] = set()
        for ancestor in self.ancestry(class_name):
            for offered in self.classes[ancestor].offers:
                if offered not in seen:
                    seen.add(offered)
                    out.append(offered)
        return out

    def data_property_keys(self, class_name: str) -> set[str]:
        """Property keys declared on the class or any ancestor."""
        keys: set[str] = set()
        for ancestor in self.ancestry(class_name):
            keys.update(name for name, _ in self.classes[ancestor].data_properties)
        return keys

    # -- serialization -------------------------------------------------

    def to_documents(self) -> tuple[dict, list[dict]]:
        """Rebuild the (ontology document, mapping documents) pair.

        Classes are sorted by name; offers and data properties keep
        declaration order.
        """
        classes = []
        for cls in sorted(self.classes.values(), key=lambda c: c.name):
            entry: dict = {"name": cls.name, "kind": cls.kind}
            if cls.parent is not None:
                entry["parent"] = cls.parent
            if cls.data_properties:
                entry["data_properties"] = {k: v for k, v in cls.data_properties}
            if cls.offers:
                entry["offers"] = list(cls.offers)
            classes.append(entry)
        by_provider: dict[str, list[dict]] = {}
        for m in self.mappings:
            by_provider.setdefault(m.provider, []).append(
                {"provider_type": m.provider_type, "ontology_class": m.ontology_class}
            )
        mapping_docs = [
            {"provider": provider, "types": types}
            for provider, types in sorted(by_provider.items())
        ]
        return {"classes": classes}, mapping_docs


def _parse_class(entry: dict) -> OntologyClass:
    if not isinstance(entry, dict):
        raise OntologyError(f"class entry must be a mapping, got {entry!r}")
    unknown = set(entry) - _CLASS_KEYS
    if unknown:
        raise OntologyError(
            f"unknown keys {sorted(unknown)} in class {entry.get('name')!r}"
        )
    name = entry.get("name")
    kind = entry.get("kind")
    if not isinstance(name, str) or not isinstance(kind, str):
        raise OntologyError(f"class entry needs string name and kind: {entry!r}")
    props = entry.get("data_properties") or {}
    if not isinstance(props, dict):
        raise OntologyError(f"data_properties of {name!r} must be a mapping")
    for prop, prop_kind in props.items():
        if prop_kind not in PROPERTY_KINDS:
            raise OntologyError(
                f"class {name!r} property {prop!r} has unknown kind {prop_kind!r}"
            )
    offers = entry.get("offers") or []
    if not isinstance(offers, list):
        raise OntologyError(f"offers of {name!r} must be a list")
    return OntologyClass(
        name=name,
        kind=kind,
        parent=entry.get("parent"),
        data_properties=tuple(props.items()),
        offers=tuple(offers),
    )


def ontology_from_documents(ontology_doc: dict, mapping_docs: list[dict]) -> Ontology:
    """Build and validate an Ontology from already-parsed documents."""
    if not isinstance(ontology_doc, dict):
        raise OntologyError("ontology document must be a mapping")
    unknown = set(ontology_doc) - _TOP_KEYS
    if unknown:
        raise OntologyError(f"unknown top-level keys {sorted(unknown)}")
    class_entries = ontology_doc.get("classes") or []
    classes: dict[str, OntologyClass] = {}
    for entry in class_entries:
        cls = _parse_class(entry)
        if cls.name in classes:
            raise OntologyError(f"duplicate class name {cls.name!r}")
        classes[cls.name] = cls

    mappings: list[InstanceMapping] = []
    inline = ontology_doc.get("mappings") or []
    docs = [{"provider": None, "types": inline}] if inline else []
    docs.extend(mapping_docs)
    for doc in docs:
        if not isinstance(doc, dict):
            raise OntologyError("mapping document must be a mapping")
        unknown = set(doc) - _MAPPING_DOC_KEYS
        if unknown:
            raise OntologyError(f"unknown keys {sorted(unknown)} in mapping document")
        provider = doc.get("provider")
        for entry in doc.get("types") or []:
            unknown = set(entry) - _MAPPING_ENTRY_KEYS - ({"provider"} if provider is None else set())
            if unknown:
                raise OntologyError(f"unknown keys {sorted(unknown)} in mapping entry")
            entry_provider = provider if provider is not None else entry.get("provider")
            if not isinstance(entry_provider, str):
                raise OntologyError(f"mapping entry missing provider: {entry!r}")
            mappings.append(
                InstanceMapping(
                    provider=entry_provider,
                    provider_type=entry["provider_type"],
                    ontology_class=entry["ontology_class"],
                )
            )
    return Ontology(classes=classes, mappings=mappings)


def load_ontology(ontology_path: str | Path, mapping_paths: list[str | Path] = ()) -> Ontology:
    """Load the ontology document and per-provider mapping files."""
    with open(ontology_path, encoding="utf-8") as fh:
        ontology_doc = yaml.safe_load(fh)
    mapping_docs = []
    for path in mapping_paths:
        with open(path, encoding="utf-8") as fh:
            mapping_docs.append(yaml.safe_load(fh))
    return ontology_from_documents(ontology_doc, mapping_docs)
