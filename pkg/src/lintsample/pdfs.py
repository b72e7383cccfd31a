"""Built-in test densities and an evaluation-counting wrapper.

All densities take a (B, k) array of points and return B values. None of
them needs to be normalized for sampling; ``gmm1d`` and ``gauss_kd`` happen
to be.
"""
import numpy as np

SQRT_2PI = np.sqrt(2 * np.pi)


class CountingPdf:
    """Wrap a PDF and count how often and on how many points it is called."""

    def __init__(self, pdf):
        self.pdf = pdf
        self.calls = 0
        self.evaluations = 0

    def __call__(self, x):
        x = np.asarray(x)
        self.calls += 1
        self.evaluations += x.shape[0] if x.ndim > 1 else x.size
        return self.pdf(x)


class GaussianMixture1D:
    """Weighted sum of 1D normals. Defaults give a three-peak mixture."""

    dim = 1

    def __init__(self, mu=(-3.0, 0.5, 2.5), sigma=(1.0, 0.25, 0.75),
                 weights=(0.4, 0.25, 0.35)):
        self.mu = np.asarray(mu, dtype=np.float64)
        self.sigma = np.asarray(sigma, dtype=np.float64)
        self.weights = np.asarray(weights, dtype=np.float64)
        if not (self.mu.shape == self.sigma.shape == self.weights.shape):
            raise ValueError("mu, sigma and weights must have equal lengths")
        if np.any(self.sigma <= 0) or np.any(self.weights < 0):
            raise ValueError("sigma must be positive and weights non-negative")

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64).reshape(-1, 1)
        z = (x - self.mu) / self.sigma
        return np.sum(self.weights * np.exp(-0.5 * z**2) / (self.sigma * SQRT_2PI), axis=1)

    @property
    def mean(self):
        return float(np.sum(self.weights * self.mu) / np.sum(self.weights))


class Doughnut2D:
    """Two Gaussian-profile rings side by side.

    Each ring has density ``exp(-(r - radius)^2 / (2 width^2))`` in the
    distance ``r`` from its center.
    """

    dim = 2

    def __init__(self, centers=(-2.5, 0.0, 2.5, 0.0), radius=1.5, width=0.25):
        self.centers = np.asarray(centers, dtype=np.float64).reshape(-1, 2)
        self.radius = float(radius)
        self.width = float(width)
        if self.radius <= 0 or self.width <= 0:
            raise ValueError("radius and width must be positive")

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64).reshape(-1, 2)
        r = np.linalg.norm(x[:, None, :] - self.centers[None], axis=2)
        return np.sum(np.exp(-0.5 * ((r - self.radius) / self.width) ** 2), axis=1)


class PowerLaw1D:
    """Navarro-Frenk-White profile ``1 / ((r/rs)(1 + r/rs)^2)``.

    Zero outside ``[r_min, r_max]``.
    """

    dim = 1

    def __init__(self, rs=1.0, r_min=0.01, r_max=100.0):
        self.rs = float(rs)
        self.r_min = float(r_min)
        self.r_max = float(r_max)
        if self.rs <= 0 or not 0 < self.r_min < self.r_max:
            raise ValueError("need rs > 0 and 0 < r_min < r_max")

    def __call__(self, x):
        r = np.asarray(x, dtype=np.float64).reshape(-1)
        inside = (r >= self.r_min) & (r <= self.r_max)
        s = np.where(inside, r, self.r_min) / self.rs
        return np.where(inside, 1.0 / (s * (1.0 + s) ** 2), 0.0)


class GaussKD:
    """Isotropic normal density in ``dim`` dimensions."""

    def __init__(self, dim=1, mu=0.0, sigma=1.0):
        self.dim = int(dim)
        self.mu = float(mu)
        self.sigma = float(sigma)
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64).reshape(-1, self.dim)
        z2 = np.sum(((x - self.mu) / self.sigma) ** 2, axis=1)
        return np.exp(-0.5 * z2) / (self.sigma * SQRT_2PI) ** self.dim


class UniformKD:
    """Constant density 1 in ``dim`` dimensions."""

    def __init__(self, dim=1):
        self.dim = int(dim)

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64).reshape(-1, self.dim)
        return np.ones(x.shape[0])


BUILTINS = {
    "gmm1d": GaussianMixture1D,
    "doughnut2d": Doughnut2D,
    "powerlaw1d": PowerLaw1D,
    "gauss_kd": GaussKD,
    "uniform_kd": UniformKD,
}

# parameters taking a list of numbers rather than a single one
_LIST_PARAMS = {"mu", "sigma", "weights", "centers"}


def parse_params(items):
    """Turn ``["mu=-3,0.5", "rs=2"]`` into ``{"mu": [-3.0, 0.5], "rs": 2.0}``."""
    params = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise ValueError(f"parameter {item!r} is not of the form name=value")
        nums = [float(v) for v in value.split(",")]
        params[key.strip()] = nums if len(nums) > 1 or key in _LIST_PARAMS else nums[0]
    return params


def make_pdf(name, dim=None, params=None):
    """Instantiate built-in density ``name``; raises ValueError on bad input."""
    if name not in BUILTINS:
        raise ValueError(f"unknown pdf {name!r}; choose from {sorted(BUILTINS)}")
    cls = BUILTINS[name]
    params = dict(params or {})
    if name in ("gauss_kd", "uniform_kd"):
        params["dim"] = 1 if dim is None else dim
        for key in ("mu", "sigma"):
            value = params.get(key)
            if isinstance(value, list):
                if len(value) != 1:
                    raise ValueError(f"{name} takes a scalar {key}")
                params[key] = value[0]
    elif dim is not None and dim != cls.dim:
        raise ValueError(f"pdf {name!r} is {cls.dim}-dimensional, not {dim}")
    try:
        return cls(**params)
    except TypeError as exc:
        raise ValueError(f"bad parameters for {name!r}: {exc}") from None
