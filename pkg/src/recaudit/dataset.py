"""
Rating, trust, group and category data.

Everything here is built once by :func:`load_dataset` and treated as
read-only afterwards; arrays are flagged non-writeable so that models and
metrics can share them across worker processes without copying.

Input files are plain text, one record per line, tab- or comma-separated.
Lines starting with ``#`` and blank lines are ignored, and files ending in
``.gz`` are decompressed transparently.

========== ==============================================
file       columns
========== ==============================================
ratings    ``user_id, item_id, rating`` (rating in [1, 5])
trust      ``trustor_id, trustee_id[, value]`` (value 1)
groups     ``user_id, group_label``
categories ``item_id, category_label`` (items repeat)
========== ==============================================
"""

from __future__ import annotations

import gzip
import hashlib
import io
import logging
import os
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterator

import numpy as np
import scipy.sparse as sps

_log = logging.getLogger(__name__)

RATING_MIN = 1.0
RATING_MAX = 5.0

_HEADER_NAMES = {
    "user", "user_id", "userid", "uid", "item", "item_id", "itemid", "iid",
    "trustor", "trustor_id", "trustee", "trustee_id", "group", "gender",
    "label", "group_label", "category", "category_label", "business_id",
}


class DatasetError(ValueError):
    """Raised for malformed or inconsistent input data."""

    def __init__(self, message, path=None, line=None):
        self.path = None if path is None else str(path)
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


def _frozen(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


def _open_text(path) -> io.TextIOBase:
    path = Path(path)
    if path.suffix == ".gz":
        return io.TextIOWrapper(gzip.open(path, "rb"), encoding="utf-8")
    return open(path, encoding="utf-8")


def _records(path) -> Iterator[tuple[int, list[str]]]:
    """Yield ``(line_number, fields)`` for every data line of a file."""
    with _open_text(path) as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            sep = "\t" if "\t" in line else ","
            yield lineno, [x.strip() for x in line.split(sep)]


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def _looks_like_header(fields: list[str]) -> bool:
    return fields[0].lower() in _HEADER_NAMES


@dataclass(frozen=True, eq=False)
class RatingMatrix:
    """
    Sparse explicit-feedback matrix over dense user and item indices.

    ``user_ids`` / ``item_ids`` map dense indices back to the external
    string ids.  Entries are stored as three parallel arrays in load order;
    fold subsets keep the full index space so that scores from different
    folds stay comparable.
    """

    user_ids: tuple[str, ...]
    item_ids: tuple[str, ...]
    users: np.ndarray
    items: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        users = _frozen(np.asarray(self.users, dtype=np.int64))
        items = _frozen(np.asarray(self.items, dtype=np.int64))
        values = _frozen(np.asarray(self.values, dtype=np.float64))
        if not (len(users) == len(items) == len(values)):
            raise DatasetError("entry arrays have different lengths")
        object.__setattr__(self, "users", users)
        object.__setattr__(self, "items", items)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "user_ids", tuple(self.user_ids))
        object.__setattr__(self, "item_ids", tuple(self.item_ids))
        if len(values):
            if users.min() < 0 or users.max() >= self.n_users:
                raise DatasetError("user index out of range")
            if items.min() < 0 or items.max() >= self.n_items:
                raise DatasetError("item index out of range")
            if values.min() < RATING_MIN or values.max() > RATING_MAX:
                raise DatasetError("rating outside [1, 5]")
            key = users * self.n_items + items
            if len(np.unique(key)) != len(key):
                raise DatasetError("duplicate (user, item) entries")

    @property
    def n_users(self) -> int:
        return len(self.user_ids)

    @property
    def n_items(self) -> int:
        return len(self.item_ids)

    @property
    def nnz(self) -> int:
        return len(self.values)

    @cached_property
    def user_index(self) -> dict[str, int]:
        return {u: i for i, u in enumerate(self.user_ids)}

    @cached_property
    def item_index(self) -> dict[str, int]:
        return {u: i for i, u in enumerate(self.item_ids)}

    @cached_property
    def csr(self) -> sps.csr_matrix:
        """Users x items ratings, rows sorted by item index."""
        m = sps.csr_matrix(
            (self.values, (self.users, self.items)), shape=(self.n_users, self.n_items)
        )
        m.sort_indices()
        return m

    @cached_property
    def csc(self) -> sps.csc_matrix:
        m = self.csr.tocsc()
        m.sort_indices()
        return m

    def user_profile(self, u: int) -> tuple[np.ndarray, np.ndarray]:
        """Item indices and ratings of user ``u``, sorted by item."""
        m = self.csr
        sl = slice(m.indptr[u], m.indptr[u + 1])
        return m.indices[sl], m.data[sl]

    def item_profile(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """User indices and ratings for item ``i``, sorted by user."""
        m = self.csc
        sl = slice(m.indptr[i], m.indptr[i + 1])
        return m.indices[sl], m.data[sl]

    def user_counts(self) -> np.ndarray:
        return np.bincount(self.users, minlength=self.n_users)

    def item_counts(self) -> np.ndarray:
        return np.bincount(self.items, minlength=self.n_items)

    def user_means(self, default: float | None = None) -> np.ndarray:
        """Mean rating of every user; users without ratings get ``default``
        (the global mean when not given)."""
        if default is None:
            default = float(self.values.mean()) if self.nnz else 0.0
        sums = np.bincount(self.users, weights=self.values, minlength=self.n_users)
        counts = self.user_counts()
        out = np.full(self.n_users, default, dtype=np.float64)
        np.divide(sums, counts, out=out, where=counts > 0)
        return out

    def subset(self, entries) -> RatingMatrix:
        """Matrix restricted to the given entry positions (index mask or
        integer array), over the same user and item index space."""
        entries = np.asarray(entries)
        return RatingMatrix(
            self.user_ids, self.item_ids,
            self.users[entries], self.items[entries], self.values[entries],
        )


def binarize(matrix: RatingMatrix) -> sps.csr_matrix:
    """Presence indicator of ``matrix``: 1 wherever a rating exists,
    whatever its value."""
    m = sps.csr_matrix(
        (np.ones(matrix.nnz, dtype=np.int64), (matrix.users, matrix.items)),
        shape=(matrix.n_users, matrix.n_items),
    )
    m.sort_indices()
    return m


@dataclass(frozen=True, eq=False)
class TrustGraph:
    """
    Directed, unweighted trust edges.

    Node indices ``0 .. n_users - 1`` coincide with the rating matrix user
    indices.  Users that only appear in the trust file are kept in a
    quarantined id space starting at ``n_users`` (``external_ids``); they
    never act as neighbors because they have no ratings.
    """

    n_users: int
    external_ids: tuple[str, ...]
    src: np.ndarray
    dst: np.ndarray

    def __post_init__(self):
        src = _frozen(np.asarray(self.src, dtype=np.int64))
        dst = _frozen(np.asarray(self.dst, dtype=np.int64))
        object.__setattr__(self, "src", src)
        object.__setattr__(self, "dst", dst)
        object.__setattr__(self, "external_ids", tuple(self.external_ids))
        if len(src) != len(dst):
            raise DatasetError("edge arrays have different lengths")
        if len(src):
            if min(src.min(), dst.min()) < 0 or max(src.max(), dst.max()) >= self.n_nodes:
                raise DatasetError("trust endpoint out of range")
            if np.any(src == dst):
                raise DatasetError("trust self-loop")
            key = src * self.n_nodes + dst
            if len(np.unique(key)) != len(key):
                raise DatasetError("duplicate trust edge")

    @property
    def n_nodes(self) -> int:
        return self.n_users + len(self.external_ids)

    @property
    def n_edges(self) -> int:
        return len(self.src)

    @cached_property
    def out_csr(self) -> sps.csr_matrix:
        m = sps.csr_matrix(
            (np.ones(self.n_edges), (self.src, self.dst)), shape=(self.n_nodes, self.n_nodes)
        )
        m.sort_indices()
        return m

    @cached_property
    def in_csr(self) -> sps.csr_matrix:
        m = self.out_csr.T.tocsr()
        m.sort_indices()
        return m

    def trusted(self, u: int) -> np.ndarray:
        """Users trusted by ``u`` (sorted), including quarantined ones."""
        m = self.out_csr
        return m.indices[m.indptr[u]:m.indptr[u + 1]]

    def trusted_raters(self, u: int) -> np.ndarray:
        """Users trusted by ``u`` that exist in the rating matrix."""
        t = self.trusted(u)
        return t[t < self.n_users]

    def internal_edges(self) -> tuple[np.ndarray, np.ndarray]:
        """Edges whose both endpoints are rating-matrix users."""
        keep = (self.src < self.n_users) & (self.dst < self.n_users)
        return self.src[keep], self.dst[keep]

    @property
    def n_trustors(self) -> int:
        return len(np.unique(self.src))

    @property
    def n_trustees(self) -> int:
        return len(np.unique(self.dst))


@dataclass(frozen=True, eq=False)
class GroupAssignment:
    """
    User group labels with a designated protected and unprotected group.

    ``codes[u]`` indexes into ``labels``; ``-1`` marks users without a
    label, who still get recommendations but are left out of group
    metrics.
    """

    labels: tuple[str, ...]
    codes: np.ndarray
    protected: str
    unprotected: str

    def __post_init__(self):
        codes = _frozen(np.asarray(self.codes, dtype=np.int64))
        object.__setattr__(self, "codes", codes)
        object.__setattr__(self, "labels", tuple(self.labels))
        if self.protected == self.unprotected:
            raise DatasetError("protected and unprotected groups must differ")
        present = {self.labels[c] for c in np.unique(codes[codes >= 0])}
        for g in (self.protected, self.unprotected):
            if g not in present:
                raise DatasetError(f"group {g!r} has no users")

    def mask(self, label: str) -> np.ndarray:
        """Boolean user mask for group ``label``."""
        try:
            code = self.labels.index(label)
        except ValueError:
            raise KeyError(label) from None
        return self.codes == code

    def sizes(self) -> dict[str, int]:
        counts = np.bincount(self.codes[self.codes >= 0], minlength=len(self.labels))
        return {g: int(c) for g, c in zip(self.labels, counts)}

    @property
    def n_unlabeled(self) -> int:
        return int(np.sum(self.codes < 0))


@dataclass(frozen=True, eq=False)
class CategoryMap:
    """Item to category-set assignment and its inverse.

    Categories are kept in sorted label order; ``matrix`` is the
    items x categories 0/1 incidence matrix.
    """

    labels: tuple[str, ...]
    n_items: int
    item_idx: np.ndarray
    cat_idx: np.ndarray

    def __post_init__(self):
        item_idx = np.asarray(self.item_idx, dtype=np.int64)
        cat_idx = np.asarray(self.cat_idx, dtype=np.int64)
        order = np.lexsort((cat_idx, item_idx))
        object.__setattr__(self, "item_idx", _frozen(item_idx[order]))
        object.__setattr__(self, "cat_idx", _frozen(cat_idx[order]))
        object.__setattr__(self, "labels", tuple(self.labels))
        if list(self.labels) != sorted(set(self.labels)):
            raise DatasetError("category labels must be unique and sorted")
        key = self.item_idx * max(len(self.labels), 1) + self.cat_idx
        if len(np.unique(key)) != len(key):
            raise DatasetError("duplicate (item, category) pair")

    @property
    def n_categories(self) -> int:
        return len(self.labels)

    @cached_property
    def matrix(self) -> sps.csr_matrix:
        m = sps.csr_matrix(
            (np.ones(len(self.item_idx), dtype=np.int64), (self.item_idx, self.cat_idx)),
            shape=(self.n_items, self.n_categories),
        )
        m.sort_indices()
        return m

    @cached_property
    def label_index(self) -> dict[str, int]:
        return {c: i for i, c in enumerate(self.labels)}

    def categories_of(self, item: int) -> frozenset[str]:
        m = self.matrix
        return frozenset(self.labels[c] for c in m.indices[m.indptr[item]:m.indptr[item + 1]])

    def items_in(self, label: str) -> np.ndarray:
        c = self.label_index[label]
        return np.sort(self.item_idx[self.cat_idx == c])

    def category_sizes(self) -> np.ndarray:
        """Number of items carrying each category."""
        return np.bincount(self.cat_idx, minlength=self.n_categories)

    def uncategorized(self) -> np.ndarray:
        return np.flatnonzero(np.bincount(self.item_idx, minlength=self.n_items) == 0)


@dataclass(frozen=True)
class LoadReport:
    n_users: int
    n_items: int
    n_ratings: int
    rating_density: float
    n_trust_edges: int
    n_trustors: int
    n_trustees: int
    trust_density: float
    trust_external_users: int
    trust_edges_external: int
    dropped_self_loops: int
    dropped_duplicate_edges: int
    group_sizes: dict[str, int]
    unlabeled_users: int
    unknown_group_users: int
    n_categories: int
    uncategorized_items: int
    unknown_category_items: int

    def as_dict(self) -> dict:
        from dataclasses import asdict

        return asdict(self)


@dataclass(frozen=True, eq=False)
class Dataset:
    ratings: RatingMatrix
    trust: TrustGraph
    groups: GroupAssignment
    categories: CategoryMap
    report: LoadReport | None = field(default=None, compare=False)

    @cached_property
    def digest(self) -> str:
        """Content hash over all four inputs, used to key cached results."""
        h = hashlib.sha256()
        r = self.ratings
        for ids in (r.user_ids, r.item_ids, self.trust.external_ids, self.groups.labels,
                    self.categories.labels):
            h.update("\x1f".join(ids).encode())
            h.update(b"\x1e")
        for a in (r.users, r.items, r.values, self.trust.src, self.trust.dst,
                  self.groups.codes, self.categories.item_idx, self.categories.cat_idx):
            h.update(np.ascontiguousarray(a).tobytes())
        h.update(f"{self.groups.protected}\x1f{self.groups.unprotected}".encode())
        return h.hexdigest()


def density(obj, base: str = "active") -> float:
    """
    Density of a rating matrix or trust graph, in percent.

    For a :class:`RatingMatrix` this is ``100 * nnz / (users * items)``.
    For a :class:`TrustGraph` the denominator depends on ``base``:
    ``"active"`` uses distinct trustors times distinct trustees, ``"users"``
    uses the squared rating-matrix user count.
    """
    if isinstance(obj, RatingMatrix):
        rows, cols, n = obj.n_users, obj.n_items, obj.nnz
    elif isinstance(obj, TrustGraph):
        n = obj.n_edges
        if base == "active":
            rows, cols = obj.n_trustors, obj.n_trustees
        elif base == "users":
            rows = cols = obj.n_users
        else:
            raise ValueError(f"unknown density base {base!r}")
    else:
        raise TypeError(f"cannot compute density of {type(obj).__name__}")
    if rows == 0 or cols == 0:
        raise ValueError("density of an empty index space")
    return 100.0 * n / (rows * cols)


def _read_ratings(path) -> RatingMatrix:
    user_index: dict[str, int] = {}
    item_index: dict[str, int] = {}
    seen: dict[tuple[int, int], int] = {}
    users, items, values = [], [], []
    first = True
    for lineno, fields in _records(path):
        if len(fields) < 3:
            raise DatasetError("expected user_id, item_id, rating", path, lineno)
        if first:
            first = False
            if not _is_number(fields[2]):
                continue
        try:
            r = float(fields[2])
        except ValueError:
            raise DatasetError(f"bad rating {fields[2]!r}", path, lineno) from None
        if not (RATING_MIN <= r <= RATING_MAX):
            raise DatasetError(f"rating {r} outside [1, 5]", path, lineno)
        u = user_index.setdefault(fields[0], len(user_index))
        i = item_index.setdefault(fields[1], len(item_index))
        prev = seen.setdefault((u, i), lineno)
        if prev != lineno:
            raise DatasetError(
                f"duplicate rating for ({fields[0]}, {fields[1]}), first seen on line {prev}",
                path, lineno,
            )
        users.append(u)
        items.append(i)
        values.append(r)
    if not values:
        raise DatasetError("no interactions", path)
    return RatingMatrix(tuple(user_index), tuple(item_index), users, items, values)


def _read_trust(path, user_index: dict[str, int]):
    n_users = len(user_index)
    external: dict[str, int] = {}
    src, dst = [], []
    seen = set()
    self_loops = dups = 0
    first = True
    for lineno, fields in _records(path):
        if len(fields) < 2:
            raise DatasetError("expected trustor_id, trustee_id[, value]", path, lineno)
        if first:
            first = False
            if _looks_like_header(fields) or (len(fields) > 2 and not _is_number(fields[2])):
                continue
        if len(fields) > 2:
            try:
                v = float(fields[2])
            except ValueError:
                raise DatasetError(f"bad trust value {fields[2]!r}", path, lineno) from None
            if v != 1.0:
                raise DatasetError(f"trust value must be 1, got {fields[2]}", path, lineno)
        ends = []
        for uid in fields[:2]:
            idx = user_index.get(uid)
            if idx is None:
                idx = n_users + external.setdefault(uid, len(external))
            ends.append(idx)
        a, b = ends
        if a == b:
            self_loops += 1
            continue
        if (a, b) in seen:
            dups += 1
            continue
        seen.add((a, b))
        src.append(a)
        dst.append(b)
    graph = TrustGraph(n_users, tuple(external), src, dst)
    return graph, self_loops, dups


def _read_pairs(path):
    first = True
    for lineno, fields in _records(path):
        if len(fields) < 2:
            raise DatasetError("expected two fields", path, lineno)
        if first:
            first = False
            if _looks_like_header(fields):
                continue
        yield lineno, fields[0], fields[1]


def _read_groups(path, user_index, protected, unprotected):
    codes = np.full(len(user_index), -1, dtype=np.int64)
    assigned: dict[int, tuple[str, int]] = {}
    found: list[tuple[int, str]] = []
    unknown = set()
    for lineno, uid, label in _read_pairs(path):
        u = user_index.get(uid)
        if u is None:
            unknown.add(uid)
            continue
        prev = assigned.get(u)
        if prev is not None:
            if prev[0] != label:
                raise DatasetError(
                    f"user {uid} has two group labels (line {prev[1]} says {prev[0]!r})",
                    path, lineno,
                )
            continue
        assigned[u] = (label, lineno)
        found.append((u, label))
    labels = sorted({lbl for _, lbl in found})
    lookup = {g: i for i, g in enumerate(labels)}
    for u, lbl in found:
        codes[u] = lookup[lbl]
    try:
        groups = GroupAssignment(tuple(labels), codes, protected, unprotected)
    except DatasetError as e:
        raise DatasetError(str(e), path) from None
    return groups, len(unknown)


def _read_categories(path, item_index):
    pairs = set()
    unknown = set()
    for lineno, iid, label in _read_pairs(path):
        i = item_index.get(iid)
        if i is None:
            unknown.add(iid)
            continue
        pairs.add((i, label))
    labels = sorted({lbl for _, lbl in pairs})
    lookup = {c: k for k, c in enumerate(labels)}
    pairs = sorted(pairs)
    cmap = CategoryMap(
        tuple(labels), len(item_index),
        [i for i, _ in pairs], [lookup[c] for _, c in pairs],
    )
    return cmap, len(unknown)


def load_dataset(
    ratings_path,
    trust_path,
    groups_path,
    categories_path,
    protected: str = "female",
    unprotected: str = "male",
) -> Dataset:
    """
    Load the four input files into a cross-indexed :class:`Dataset`.

    User and item indices follow first appearance in the ratings file.
    Trust endpoints, group rows and category rows that reference unknown
    users or items are counted in the load report rather than rejected.

    Raises
    ------
    DatasetError
        On malformed lines, out-of-range ratings, duplicate ratings,
        conflicting group labels, or a designated group with no users.
    FileNotFoundError
        If any input file is missing.
    """
    for p in (ratings_path, trust_path, groups_path, categories_path):
        if not os.path.exists(p):
            raise FileNotFoundError(f"no such file: {p}")
    ratings = _read_ratings(ratings_path)
    trust, loops, dups = _read_trust(trust_path, ratings.user_index)
    groups, unknown_users = _read_groups(groups_path, ratings.user_index, protected, unprotected)
    cats, unknown_items = _read_categories(categories_path, ratings.item_index)

    if loops or dups:
        _log.warning("%s: dropped %d self-loops and %d duplicate edges", trust_path, loops, dups)
    uncategorized = len(cats.uncategorized())
    if uncategorized:
        _log.info("%d items have no category", uncategorized)

    ext_edges = int(np.sum((trust.src >= trust.n_users) | (trust.dst >= trust.n_users)))
    report = LoadReport(
        n_users=ratings.n_users,
        n_items=ratings.n_items,
        n_ratings=ratings.nnz,
        rating_density=density(ratings),
        n_trust_edges=trust.n_edges,
        n_trustors=trust.n_trustors,
        n_trustees=trust.n_trustees,
        trust_density=density(trust) if trust.n_edges else 0.0,
        trust_external_users=len(trust.external_ids),
        trust_edges_external=ext_edges,
        dropped_self_loops=loops,
        dropped_duplicate_edges=dups,
        group_sizes=groups.sizes(),
        unlabeled_users=groups.n_unlabeled,
        unknown_group_users=unknown_users,
        n_categories=cats.n_categories,
        uncategorized_items=uncategorized,
        unknown_category_items=unknown_items,
    )
    return Dataset(ratings, trust, groups, cats, report)


def save_dataset(data: Dataset, directory, compress: bool = False) -> dict[str, Path]:
    """Write ``data`` back out in the input file format.

    Returns the paths written, keyed ``ratings``, ``trust``, ``groups`` and
    ``categories``.  Loading them again yields identical index maps and
    entries.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    ext = ".tsv.gz" if compress else ".tsv"
    paths = {k: directory / f"{k}{ext}" for k in ("ratings", "trust", "groups", "categories")}
    r = data.ratings
    uid = list(r.user_ids) + list(data.trust.external_ids)

    def write(key, lines):
        text = "".join(lines)
        if compress:
            # mtime=0 keeps the archive byte-stable
            with open(paths[key], "wb") as f, gzip.GzipFile(fileobj=f, mode="wb", mtime=0) as gz:
                gz.write(text.encode())
        else:
            paths[key].write_text(text, encoding="utf-8")

    write("ratings", (
        f"{r.user_ids[u]}\t{r.item_ids[i]}\t{v:g}\n" for u, i, v in zip(r.users, r.items, r.values)
    ))
    write("trust", (f"{uid[a]}\t{uid[b]}\n" for a, b in zip(data.trust.src, data.trust.dst)))
    g = data.groups
    write("groups", (
        f"{r.user_ids[u]}\t{g.labels[c]}\n" for u, c in enumerate(g.codes) if c >= 0
    ))
    c = data.categories
    write("categories", (
        f"{r.item_ids[i]}\t{c.labels[k]}\n" for i, k in zip(c.item_idx, c.cat_idx)
    ))
    return paths


@dataclass(frozen=True, eq=False)
class FoldSplit:
    """
    Assignment of rating entries to cross-validation test folds.

    ``fold_of[e]`` is the fold whose test set holds entry ``e``, or ``-1``
    for entries that stay in training for every fold (users with fewer
    ratings than folds).
    """

    k: int
    fold_of: np.ndarray
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "fold_of", _frozen(np.asarray(self.fold_of, dtype=np.int64)))

    def test_entries(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of == fold)

    def train_entries(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of != fold)

    def train(self, matrix: RatingMatrix, fold: int) -> RatingMatrix:
        return matrix.subset(self.train_entries(fold))

    def test(self, matrix: RatingMatrix, fold: int) -> RatingMatrix:
        return matrix.subset(self.test_entries(fold))

    def folds(self, matrix: RatingMatrix) -> Iterator[tuple[int, RatingMatrix, RatingMatrix]]:
        for f in range(self.k):
            yield f, self.train(matrix, f), self.test(matrix, f)


def kfold_split(matrix: RatingMatrix, k: int = 5, seed: int = 0) -> FoldSplit:
    """
    Per-user stratified k-fold split.

    Each user's ratings are shuffled and dealt round-robin over the folds,
    starting at a random fold, so every fold tests about ``1/k`` of every
    user's ratings.  Users with fewer than ``k`` ratings keep everything in
    training.
    """
    if k < 2:
        raise ValueError(f"need at least 2 folds, got {k}")
    rng = np.random.default_rng(seed)
    fold_of = np.full(matrix.nnz, -1, dtype=np.int64)
    order = np.argsort(matrix.users, kind="stable")
    bounds = np.searchsorted(matrix.users[order], np.arange(matrix.n_users + 1))
    for u in range(matrix.n_users):
        entries = order[bounds[u]:bounds[u + 1]]
        n = len(entries)
        if n < k:
            continue
        perm = rng.permutation(n)
        start = rng.integers(k)
        fold_of[entries[perm]] = (start + np.arange(n)) % k
    return FoldSplit(k, fold_of, seed)


def write_split(split: FoldSplit, matrix: RatingMatrix, path) -> None:
    """Write ``user_id, item_id, fold`` lines for every entry."""
    with open(path, "w", encoding="utf-8") as f:
        f.write("user_id\titem_id\tfold\n")
        for u, i, fo in zip(matrix.users, matrix.items, split.fold_of):
            f.write(f"{matrix.user_ids[u]}\t{matrix.item_ids[i]}\t{fo}\n")


def ratings_from_arrays(users, items, values, n_users=None, n_items=None) -> RatingMatrix:
    """Build a :class:`RatingMatrix` from index arrays, naming users
    ``u0, u1, ...`` and items ``i0, i1, ...``."""
    users = np.asarray(users, dtype=np.int64)
    items = np.asarray(items, dtype=np.int64)
    if n_users is None:
        n_users = int(users.max()) + 1 if len(users) else 0
    if n_items is None:
        n_items = int(items.max()) + 1 if len(items) else 0
    return RatingMatrix(
        [f"u{k}" for k in range(n_users)], [f"i{k}" for k in range(n_items)],
        users, items, values,
    )
