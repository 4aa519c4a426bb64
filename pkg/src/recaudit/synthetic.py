"""
Synthetic stand-ins for the Yelp core-40 data.

:func:`make_yelp_like` draws a dataset whose headline statistics match the
published core-40 sample exactly (user, item, rating and trust-edge
counts, distinct trustors and trustees, the 40-rating core) while the
ratings, group tastes and trust links come from a small latent-factor
model.  A copy generated with the default seed ships with the package;
see :func:`bundled_paths`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .dataset import (
    CategoryMap,
    Dataset,
    GroupAssignment,
    RatingMatrix,
    TrustGraph,
    load_dataset,
    save_dataset,
)


@dataclass(frozen=True)
class Shape:
    n_users: int = 1355
    n_items: int = 1272
    n_ratings: int = 100409
    core: int = 40
    n_edges: int = 26453
    n_trustors: int = 919
    n_trustees: int = 1172
    n_categories: int = 40
    n_factors: int = 8
    male_share: float = 0.55
    female_share: float = 0.35


YELP_CORE40 = Shape()


def _category_assignment(rng, shape: Shape):
    pop = 1.0 / np.arange(1, shape.n_categories + 1) ** 0.8
    pop /= pop.sum()
    item_idx, cat_idx = [], []
    for i in range(shape.n_items):
        k = 1 + min(rng.poisson(1.2), 4)
        cats = rng.choice(shape.n_categories, size=k, replace=False, p=pop)
        item_idx.extend([i] * k)
        cat_idx.extend(sorted(cats))
    return np.array(item_idx), np.array(cat_idx)


def _core_backbone(rng, nu, ni, core):
    """
    Random users x items pattern with exactly ``core`` items per user and at
    least ``core`` users per item.

    Users deal ``core`` items each from a stream of independent item
    permutations, so item counts differ by at most one.  A chunk that
    straddles two permutations may repeat an item; repeats are swapped
    with later stream positions, which keeps the counts.
    """
    n_perm = -(-nu * core // ni)
    stream = np.concatenate([rng.permutation(ni) for _ in range(n_perm)])
    for u in range(nu):
        lo, hi = u * core, (u + 1) * core
        chunk = stream[lo:hi]
        while len(np.unique(chunk)) < core:
            _, first = np.unique(chunk, return_index=True)
            dup = np.setdiff1d(np.arange(core), first)[0] + lo
            taken = set(chunk.tolist())
            # later chunks repair their own repeats when their turn comes
            j = next(j for j in range(hi, len(stream)) if stream[j] not in taken)
            stream[dup], stream[j] = stream[j], stream[dup]
            chunk = stream[lo:hi]
    rated = np.zeros((nu, ni), dtype=bool)
    rated[np.repeat(np.arange(nu), core), stream[:nu * core]] = True
    return rated


def make_yelp_like(seed: int = 20190919, shape: Shape = YELP_CORE40) -> Dataset:
    """Generate a dataset with the size statistics of ``shape``."""
    rng = np.random.default_rng(seed)
    nu, ni, d = shape.n_users, shape.n_items, shape.n_factors
    extra = shape.n_ratings - nu * shape.core
    if extra < 0 or nu * shape.core < ni * shape.core:
        raise ValueError("shape cannot satisfy the rating core")

    # groups: 0 male, 1 female, -1 unknown
    g = rng.choice([0, 1, -1], size=nu,
                   p=[shape.male_share, shape.female_share, 1 - shape.male_share - shape.female_share])

    item_idx, cat_idx = _category_assignment(rng, shape)
    cat_mat = np.zeros((ni, shape.n_categories))
    cat_mat[item_idx, cat_idx] = 1.0

    # tastes: group-level category affinity plus individual factors
    group_taste = rng.normal(0, 0.8, size=(2, shape.n_categories))
    user_taste = rng.normal(0, 0.5, size=(nu, shape.n_categories))
    user_taste[g >= 0] += group_taste[g[g >= 0]]
    P = rng.normal(0, 0.6, size=(nu, d))
    Q = rng.normal(0, 0.6, size=(ni, d))
    item_pop = rng.normal(0, 1.0, size=ni)
    cat_norm = np.maximum(cat_mat.sum(axis=1), 1.0)
    pref = P @ Q.T + (user_taste @ cat_mat.T) / cat_norm + item_pop

    rated = _core_backbone(rng, nu, ni, shape.core)

    activity = rng.lognormal(0, 0.9, size=nu)
    counts = rng.multinomial(extra, activity / activity.sum())
    cap = ni - shape.core
    # push overflow onto users with room, one rating at a time
    while counts.max() > cap:
        over = np.argmax(counts)
        spill = counts[over] - cap
        counts[over] = cap
        room = np.flatnonzero(counts < cap)
        counts += np.bincount(rng.choice(room, size=spill), minlength=nu)
    for u in range(nu):
        if counts[u] == 0:
            continue
        free = np.flatnonzero(~rated[u])
        w = np.exp(pref[u, free] - pref[u, free].max())
        pick = rng.choice(free, size=counts[u], replace=False, p=w / w.sum())
        rated[u, pick] = True

    users, items = np.nonzero(rated)
    z = (pref - pref.mean()) / pref.std()
    raw = 3.7 + 0.9 * z[users, items] + rng.normal(0, 0.7, size=len(users))
    values = np.clip(np.rint(raw), 1, 5)
    order = rng.permutation(len(users))
    users, items, values = users[order], items[order], values[order]

    user_ids = [f"U{k:05d}" for k in range(nu)]
    item_ids = [f"B{k:05d}" for k in range(ni)]
    ratings = RatingMatrix(user_ids, item_ids, users, items, values)

    trust = _trust_edges(rng, shape, g, P)
    labels = ("female", "male")
    codes = np.where(g == 0, 1, np.where(g == 1, 0, -1))
    groups = GroupAssignment(labels, codes, "female", "male")
    cat_labels = tuple(f"cat{c:02d}" for c in range(shape.n_categories))
    cats = CategoryMap(cat_labels, ni, item_idx, cat_idx)
    return Dataset(ratings, TrustGraph(nu, (), trust[0], trust[1]), groups, cats)


def _trust_edges(rng, shape: Shape, g, P):
    nu = shape.n_users
    trustors = rng.choice(nu, size=shape.n_trustors, replace=False)
    trustees = rng.choice(nu, size=shape.n_trustees, replace=False)
    edges: set[tuple[int, int]] = set()
    src, dst = [], []

    def add(a, b):
        if a != b and (a, b) not in edges:
            edges.add((a, b))
            src.append(a)
            dst.append(b)
            return True
        return False

    # seed edges so every trustor and every trustee is used at least once
    n_seed = max(shape.n_trustors, shape.n_trustees)
    for t in range(n_seed):
        a = trustors[t % shape.n_trustors]
        b = trustees[t % shape.n_trustees]
        shift = 1
        while not add(a, b):
            a = trustors[(t + shift) % shape.n_trustors]
            shift += 1

    out_w = rng.lognormal(0, 1.0, size=shape.n_trustors)
    out_w /= out_w.sum()
    in_pop = rng.lognormal(0, 0.8, size=shape.n_trustees)
    same = g[trustors][:, None] == g[trustees][None, :]
    affinity = P[trustors] @ P[trustees].T
    while len(src) < shape.n_edges:
        a_pos = rng.choice(shape.n_trustors, p=out_w)
        w = in_pop * np.exp(0.5 * affinity[a_pos] + 0.7 * same[a_pos])
        need = min(shape.n_edges - len(src), 64)
        for b_pos in rng.choice(shape.n_trustees, size=need, p=w / w.sum()):
            add(trustors[a_pos], trustees[b_pos])
            if len(src) == shape.n_edges:
                break
    return np.array(src), np.array(dst)


def write_fixture(directory, seed: int = 20190919, shape: Shape = YELP_CORE40) -> dict:
    """Generate, save (gzip) and describe a fixture in ``directory``."""
    data = make_yelp_like(seed, shape)
    paths = save_dataset(data, directory, compress=True)
    reloaded = load_dataset(*(paths[k] for k in ("ratings", "trust", "groups", "categories")))
    summary = reloaded.report.as_dict()
    summary["seed"] = seed
    Path(directory, "expected.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary


def bundled_paths() -> dict[str, Path]:
    """Paths of the synthetic core-40 fixture shipped with the package."""
    root = Path(str(resources.files("recaudit") / "fixtures" / "yelp_synth"))
    out = {k: root / f"{k}.tsv.gz" for k in ("ratings", "trust", "groups", "categories")}
    out["expected"] = root / "expected.json"
    return out


def load_bundled() -> Dataset:
    p = bundled_paths()
    return load_dataset(p["ratings"], p["trust"], p["groups"], p["categories"])
