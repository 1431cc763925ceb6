from hardy.weights import WeightSpec, make_weights

_WEIGHTS_CACHE = {}

def get_shared_weights(spec, n_terms):
    """
    Returns a process-global cached WeightSequence for (spec, n_terms).
    This prevents re-reading weight files and rebuilding prefix sums for every
    trial in a worker process.
    """
    if isinstance(spec, str):
        spec = WeightSpec.parse(spec)
    key = (spec, int(n_terms))
    if key not in _WEIGHTS_CACHE:
        _WEIGHTS_CACHE[key] = make_weights(spec, n_terms)
    return _WEIGHTS_CACHE[key]

def reset_weights_cache():
    """
    Clears the global weight cache (useful for testing).
    """
    _WEIGHTS_CACHE.clear()
