"""Grouped network autoregression with latent node groups.

Thin wrapper over the compiled extension. Typical use:

    import gnar
    net = gnar.gen_sbm(100, 5, seed=1)
    w = gnar.row_normalize(net)
    y = gnar.simulate(params, membership, w, z, horizon=300)
    pool = gnar.init_pool(y, z, w, n_groups=2)
    result = gnar.fit(y, z, w, 2, pool)
"""

try:
    from gnar._core import *  # noqa: F401,F403
    from gnar._core import __version__  # noqa: F401
except ImportError:  # in-tree build: extension on sys.path, not in the package
    from _core import *  # noqa: F401,F403
    from _core import __version__  # noqa: F401
