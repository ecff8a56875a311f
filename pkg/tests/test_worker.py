import logging

from sivsim import worker
from sivsim.worker import map_tasks, sweep_seed


def _square(x):
    return x * x


def test_serial_and_pool_agree_in_order():
    tasks = list(range(7))
    assert map_tasks(_square, tasks) == [x * x for x in tasks]
    assert map_tasks(_square, tasks, jobs=3) == [x * x for x in tasks]
    assert map_tasks(_square, [], jobs=4) == []


def test_pool_failure_falls_back_to_serial(monkeypatch, caplog):
    class Broken:
        def Pool(self, processes):
            raise OSError('no semaphores')

    monkeypatch.setattr(worker.multiprocessing, 'get_context', lambda: Broken())
    with caplog.at_level(logging.WARNING, logger='sivsim'):
        assert map_tasks(_square, [1, 2, 3], jobs=2) == [1, 4, 9]
    assert 'running 3 tasks serially' in caplog.text


def test_sweep_seeds_are_distinct():
    seeds = [sweep_seed(7, i) for i in range(5)]
    assert seeds == [7, 1007, 2007, 3007, 4007]
