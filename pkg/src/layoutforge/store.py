"""Filesystem-backed prior store with an in-memory cache.

Every artifact is one JSON file under a two-level directory keyed by the
sha256 of its relation/hyper key, written atomically (write + rename) with
canonical byte-stable encoding. Readers are concurrent; writes take a
per-key lock. The store counts lookups, disk reads, and cache hits so tests
can pin the caching contract.
"""

from __future__ import annotations

import json
import logging
import os
import threading
from pathlib import Path
from typing import Optional

from .chains import PatternChainSet
from .extraction import PairwiseRelation
from .hyper import HyperKey, HyperPrior, HyperRelation
from .jsonio import canonical_dumps, key_hash
from .scene import Transform

logger = logging.getLogger(__name__)


class StoreIntegrityError(Exception):
    """A prior file exists but cannot be decoded."""

    def __init__(self, key: str, path: str, detail: str):
        super().__init__(f"corrupt prior file for key {key!r} at {path}: {detail}")
        self.key = key
        self.path = path


def _transform_doc(t: Transform) -> dict:
    return {"x": t.x, "y": t.y, "z": t.z, "theta": t.theta}


def _transform_from(doc: dict) -> Transform:
    return Transform(doc["x"], doc["y"], doc["z"], doc["theta"])


class PriorStore:
    def __init__(self, root: str | os.PathLike):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._cache: dict[tuple[str, str], object] = {}
        self._hashes: dict[tuple[str, str], str] = {}
        self._lock = threading.RLock()
        self._key_locks: dict[tuple[str, str], threading.Lock] = {}
        self.lookups = 0
        self.disk_reads = 0
        self.cache_hits = 0
        self.stale_chain_loads = 0
        self.writes = 0

    # -- internals ------------------------------------------------------------

    def _path(self, kind: str, key: str) -> Path:
        digest = key_hash(key)
        return self.root / kind / digest[:2] / f"{digest}.json"

    def _key_lock(self, kind: str, key: str) -> threading.Lock:
        with self._lock:
            return self._key_locks.setdefault((kind, key), threading.Lock())

    def _write(self, kind: str, key: str, doc: dict, value: object) -> Path:
        path = self._path(kind, key)
        data = canonical_dumps(doc)
        with self._key_lock(kind, key):
            path.parent.mkdir(parents=True, exist_ok=True)
            tmp = path.with_suffix(".tmp")
            tmp.write_text(data, encoding="utf-8")
            os.replace(tmp, path)
            with self._lock:
                self._cache[(kind, key)] = value
                self._hashes[(kind, key)] = key_hash(data)
                self.writes += 1
        return path

    def _load_doc(self, kind: str, key: str) -> Optional[dict]:
        path = self._path(kind, key)
        if not path.exists():
            return None
        try:
            text = path.read_text(encoding="utf-8")
            with self._lock:
                self.disk_reads += 1
            doc = json.loads(text)
        except (OSError, json.JSONDecodeError) as e:
            raise StoreIntegrityError(key, str(path), str(e)) from e
        with self._lock:
            self._hashes[(kind, key)] = key_hash(text)
        return doc

    def _cached(self, kind: str, key: str):
        with self._lock:
            if (kind, key) in self._cache:
                self.cache_hits += 1
                return True, self._cache[(kind, key)]
        return False, None

    def _load(self, kind: str, key: str, decode) -> Optional[object]:
        with self._lock:
            self.lookups += 1
        hit, value = self._cached(kind, key)
        if hit:
            return value
        # Single-flight read per key: concurrent misses share one disk read.
        with self._key_lock(kind, key):
            hit, value = self._cached(kind, key)
            if hit:
                return value
            doc = self._load_doc(kind, key)
            if doc is None:
                return None
            try:
                value = decode(doc)
            except (KeyError, TypeError, ValueError) as e:
                raise StoreIntegrityError(key, str(self._path(kind, key)), str(e)) from e
            with self._lock:
                self._cache[(kind, key)] = value
            return value

    # -- pairwise relations ---------------------------------------------------

    def save_pairwise(self, relation: PairwiseRelation) -> Path:
        doc = {
            "dominant": relation.dominant_id,
            "secondary": relation.secondary_id,
            "meta": relation.meta,
            "priors": [_transform_doc(t) for t in relation.priors],
        }
        return self._write("pairwise", relation.key, doc, relation)

    def load_pairwise(self, dominant_id: str, secondary_id: str) -> Optional[PairwiseRelation]:
        key = f"{dominant_id}|{secondary_id}"

        def decode(doc: dict) -> PairwiseRelation:
            return PairwiseRelation(
                dominant_id=doc["dominant"],
                secondary_id=doc["secondary"],
                priors=[_transform_from(p) for p in doc["priors"]],
                meta=doc.get("meta", {}),
            )

        return self._load("pairwise", key, decode)

    # -- pattern chains ---------------------------------------------------------

    def save_chains(self, chain_set: PatternChainSet) -> Path:
        doc = {
            "relationHash": chain_set.relation_hash,
            "chains": chain_set.chains,
            "aligned": chain_set.aligned,
        }
        return self._write("chains", chain_set.key, doc, chain_set)

    def load_chains(
        self,
        dominant_id: str,
        secondary_id: str,
        expected_relation_hash: Optional[str] = None,
    ) -> Optional[PatternChainSet]:
        key = f"{dominant_id}|{secondary_id}"

        def decode(doc: dict) -> PatternChainSet:
            return PatternChainSet(
                dominant_id=dominant_id,
                secondary_id=secondary_id,
                chains=[[int(i) for i in chain] for chain in doc["chains"]],
                aligned=bool(doc["aligned"]),
                relation_hash=doc["relationHash"],
            )

        value = self._load("chains", key, decode)
        if value is None:
            return None
        if expected_relation_hash is not None and value.relation_hash != expected_relation_hash:
            # Stale: the underlying relation changed since these chains were
            # computed. Fail soft so the caller regenerates.
            with self._lock:
                self.stale_chain_loads += 1
                self._cache.pop(("chains", key), None)
            return None
        return value

    # -- hyper-relations --------------------------------------------------------

    def save_hyper(self, relation: HyperRelation) -> Path:
        key = relation.key.to_string()
        doc = {
            "key": key,
            "status": relation.status,
            "priors": [
                [
                    {"slot": slot, "x": t.x, "y": t.y, "z": t.z, "theta": t.theta}
                    for slot, t in prior.poses
                ]
                for prior in relation.priors
            ],
        }
        return self._write("hyper", key, doc, relation)

    def load_hyper(self, key: str) -> Optional[HyperRelation]:
        def decode(doc: dict) -> HyperRelation:
            priors = [
                HyperPrior(
                    poses=tuple(
                        (int(p["slot"]), _transform_from(p)) for p in prior
                    )
                )
                for prior in doc["priors"]
            ]
            return HyperRelation(
                key=HyperKey.from_string(doc["key"]), priors=priors, status=doc["status"]
            )

        return self._load("hyper", key, decode)

    # -- key listing ------------------------------------------------------------

    def _scan(self, kind: str) -> list[dict]:
        base = self.root / kind
        docs = []
        if not base.is_dir():
            return docs
        for sub in sorted(base.iterdir()):
            if not sub.is_dir():
                continue
            for fp in sorted(sub.glob("*.json")):
                try:
                    docs.append(json.loads(fp.read_text(encoding="utf-8")))
                except (OSError, json.JSONDecodeError) as e:
                    raise StoreIntegrityError("<scan>", str(fp), str(e)) from e
        return docs

    def pairwise_keys(self) -> list[str]:
        return sorted(f"{d['dominant']}|{d['secondary']}" for d in self._scan("pairwise"))

    def chain_keys(self) -> list[str]:
        # Chain files carry no ids; they share the hashed key of their relation.
        keys = []
        for key in self.pairwise_keys():
            if self._path("chains", key).exists():
                keys.append(key)
        return keys

    def hyper_keys(self) -> list[str]:
        return sorted(d["key"] for d in self._scan("hyper"))

    # -- instrumentation ----------------------------------------------------------

    def counters(self) -> dict:
        with self._lock:
            return {
                "lookups": self.lookups,
                "diskReads": self.disk_reads,
                "cacheHits": self.cache_hits,
                "staleChainLoads": self.stale_chain_loads,
                "writes": self.writes,
            }

    def reset_counters(self) -> None:
        with self._lock:
            self.lookups = 0
            self.disk_reads = 0
            self.cache_hits = 0
            self.stale_chain_loads = 0
            self.writes = 0
