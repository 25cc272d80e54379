"""Counter-based random streams.

Every noise source in an environment draws from its own Philox stream keyed
by (master_seed, env_index, episode, stream name), so the draw sequence is a
pure function of those keys and is independent of thread scheduling or of
how many other noise sources are enabled.
"""

import numpy as np

# Stable stream ids; appending is fine, reordering breaks reproducibility.
STREAMS = (
    "spawn",
    "domain_rand",
    "scenario",
    "motor_noise",
    "collision",
    "downwash",
    "sensor",
    "policy",
)

_STREAM_ID = {name: i for i, name in enumerate(STREAMS)}


def stream_generator(master_seed, env_index, episode, stream):
    """Return a seeded Generator for one (env, episode, noise-source) stream."""
    if stream not in _STREAM_ID:
        raise KeyError(f"unknown rng stream {stream!r}")
    ss = np.random.SeedSequence(
        entropy=(int(master_seed) & (2**64 - 1), int(env_index), int(episode)),
        spawn_key=(_STREAM_ID[stream],),
    )
    return np.random.Generator(np.random.Philox(ss))


def make_streams(master_seed, env_index, episode):
    """All named streams for one episode, as a dict."""
    return {
        name: stream_generator(master_seed, env_index, episode, name)
        for name in STREAMS
    }
