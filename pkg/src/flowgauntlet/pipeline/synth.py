"""Two-cluster synthetic flow data with internally consistent derived features."""

from dataclasses import dataclass, field

import numpy as np

from ..flowdata import FEATURES, Dataset, Scale

# Per-class (mean, std) in original units for the independently drawn
# columns. Malware flows are short, small and fast (beaconing) with tiny
# replies; benign flows are longer and heavier. Window size and hop count
# overlap.
BENIGN_CLUSTER = {
    "SrcWin": (8192.0, 3000.0),
    "sHops": (12.0, 4.0),
    "SrcBytes": (3000.0, 900.0),
    "DstBytes": (2500.0, 1000.0),
    "Dur": (20.0, 6.0),
}
MALWARE_CLUSTER = {
    "SrcWin": (7000.0, 3000.0),
    "sHops": (10.0, 4.0),
    "SrcBytes": (900.0, 400.0),
    "DstBytes": (300.0, 120.0),
    "Dur": (1.5, 0.7),
}
MIN_DUR = 0.05
DST_INITIAL_TTL = 128.0


@dataclass(frozen=True)
class SyntheticSpec:
    n_benign: int = 1000
    n_malware: int = 1000
    benign: dict = field(default_factory=lambda: dict(BENIGN_CLUSTER))
    malware: dict = field(default_factory=lambda: dict(MALWARE_CLUSTER))
    seed: int = 0

    def __post_init__(self):
        if self.n_benign < 1 or self.n_malware < 1:
            raise ValueError("both class counts must be >= 1")
        for cluster in (self.benign, self.malware):
            missing = set(BENIGN_CLUSTER) - set(cluster)
            if missing:
                raise ValueError(f"cluster lacks {sorted(missing)}")


def _draw(rng, n, cluster):
    def g(name):
        mu, sd = cluster[name]
        return rng.normal(mu, sd, n)

    src_win = np.round(np.clip(g("SrcWin"), 0.0, 65535.0))
    s_hops = np.round(np.clip(g("sHops"), 0.0, 64.0))
    src_bytes = np.round(np.maximum(g("SrcBytes"), 1.0))
    dst_bytes = np.round(np.maximum(g("DstBytes"), 0.0))
    dur = np.maximum(g("Dur"), MIN_DUR)
    s_ttl = 255.0 - s_hops
    d_ttl = np.clip(DST_INITIAL_TTL - s_hops, 0.0, 255.0)
    tot = src_bytes + dst_bytes
    rate = tot / dur
    cols = {"SrcWin": src_win, "sHops": s_hops, "sTtl": s_ttl, "dTtl": d_ttl,
            "SrcBytes": src_bytes, "DstBytes": dst_bytes, "Dur": dur,
            "TotBytes": tot, "Rate": rate}
    return np.column_stack([cols[f] for f in FEATURES])


def generate_synthetic_flows(spec=None):
    """Benign rows first, then malware, shuffled together under ``spec.seed``.

    Byte counts and hop counts are whole numbers, so ``TotBytes`` equals
    ``SrcBytes + DstBytes`` exactly; ``Rate`` is ``TotBytes / Dur``.
    """
    spec = spec or SyntheticSpec()
    rng = np.random.default_rng(spec.seed)
    X = np.vstack([_draw(rng, spec.n_benign, spec.benign), _draw(rng, spec.n_malware, spec.malware)])
    y = np.concatenate([np.zeros(spec.n_benign, np.int64), np.ones(spec.n_malware, np.int64)])
    order = rng.permutation(len(y))
    return Dataset(X[order], y[order], Scale.ORIGINAL, FEATURES)
