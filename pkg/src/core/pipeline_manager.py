"""LDOF Pipeline Manager
Bounded parallel execution of independent stages (one per
sweep run). Failed stages are recorded, never raised.
"""
import asyncio
import time
import logging
from typing import Dict, List, Any, Optional, Callable
from dataclasses import dataclass, field
from enum import Enum

from .errors import FailureType, classify_failure

logger = logging.getLogger("ldof.pipeline")


class StageStatus(Enum):
    PENDING = "pending"
    RUNNING = "running"
    COMPLETED = "completed"
    FAILED = "failed"


@dataclass
class PipelineStage:
    name: str
    handler: Callable[[], Any]
    status: StageStatus = StageStatus.PENDING
    result: Any = None
    error: Optional[str] = None
    failure_type: Optional[FailureType] = None
    duration: float = 0.0


@dataclass
class PipelineRun:
    run_id: str
    stages: Dict[str, PipelineStage] = field(default_factory=dict)
    start_time: float = 0.0
    end_time: float = 0.0
    status: str = "pending"

    def results(self) -> Dict[str, Any]:
        return {
            name: s.result for name, s in self.stages.items()
            if s.status == StageStatus.COMPLETED
        }

    def failures(self) -> Dict[str, PipelineStage]:
        return {name: s for name, s in self.stages.items() if s.status == StageStatus.FAILED}


class PipelineManager:
    """Runs stage handlers in worker threads, at most `max_parallel` at once."""

    def __init__(self, max_parallel: int = 1):
        self.max_parallel = max(1, int(max_parallel))

    async def execute(self, run_id: str, stages: List[PipelineStage]) -> PipelineRun:
        names = [s.name for s in stages]
        if len(set(names)) != len(names):
            raise ValueError(f"Duplicate stage names in {run_id}")
        run = PipelineRun(
            run_id=run_id, stages={s.name: s for s in stages},
            start_time=time.time(), status="running",
        )
        semaphore = asyncio.Semaphore(self.max_parallel)
        await asyncio.gather(*(self._run_stage(s, semaphore) for s in stages))
        run.end_time = time.time()
        run.status = "failed" if run.failures() else "completed"
        logger.info(f"Pipeline {run_id} {run.status} in {run.end_time - run.start_time:.2f}s "
                    f"({len(stages)} stages, {self.max_parallel} workers)")
        return run

    def run(self, run_id: str, stages: List[PipelineStage]) -> PipelineRun:
        return asyncio.run(self.execute(run_id, stages))

    async def _run_stage(self, stage: PipelineStage, semaphore: asyncio.Semaphore) -> None:
        async with semaphore:
            stage.status = StageStatus.RUNNING
            start = time.perf_counter()
            try:
                if self.max_parallel == 1:
                    stage.result = stage.handler()
                else:
                    stage.result = await asyncio.to_thread(stage.handler)
                stage.status = StageStatus.COMPLETED
            except Exception as e:
                stage.status = StageStatus.FAILED
                stage.error = str(e)
                stage.failure_type = classify_failure(e)
                logger.error(f"Stage {stage.name} failed: {stage.error}")
            finally:
                stage.duration = time.perf_counter() - start
