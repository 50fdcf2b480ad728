"""Ordered parallel map over replication chunks."""

from concurrent.futures import ProcessPoolExecutor


def chunks(total, size):
    """(replication index, draws) pairs covering ``total`` draws in blocks of
    ``size``; the split never depends on the worker count."""
    out = []
    rep = 0
    done = 0
    while done < total:
        n = min(size, total - done)
        out.append((rep, n))
        rep += 1
        done += n
    return out


def ordered_map(fn, tasks, workers=1):
    """``[fn(t) for t in tasks]``, computed on up to ``workers`` processes.
    Results come back in task order whatever order they finish in."""
    tasks = list(tasks)
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
        return list(pool.map(fn, tasks))
