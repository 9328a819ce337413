import asyncio
from typing import Any, Callable, List, Sequence


class AsyncEngine:
    """Bounded fan-out of blocking per-item work onto worker threads.

    Results come back in input order. With ``max_concurrency == 1`` every
    task runs inline on the event loop thread, one after another.
    """

    def __init__(self, max_concurrency: int = 1):
        self.max_concurrency = max(1, int(max_concurrency))
        self.sem = None

    async def run_task(self, fn: Callable[..., Any], *args: Any) -> Any:
        async with self.sem:
            if self.max_concurrency == 1:
                return fn(*args)
            return await asyncio.to_thread(fn, *args)

    async def map(self, fn: Callable[..., Any], items: Sequence[Any]) -> List[Any]:
        self.sem = asyncio.Semaphore(self.max_concurrency)
        return list(await asyncio.gather(*(self.run_task(fn, *item) for item in items)))

    def run(self, fn: Callable[..., Any], items: Sequence[Any]) -> List[Any]:
        """Blocking entry point; each item is an argument tuple for ``fn``."""
        return asyncio.run(self.map(fn, items))
