# region Imports

from typing import Optional

from pydantic import BaseModel, Field

from core.models import RunRecord

# endregion
# region Pydantic Models


class StreamingServiceResponse(BaseModel):
    """
    Progress message yielded by long-running services.
    Attributes:
        status (str): 'info', 'progress', 'success', 'warning' or 'error'.
        message (Optional[str]): Human-readable detail.
    """

    status: str = Field(
        ..., description="The status of the response (e.g., 'success', 'error')"
    )
    message: Optional[str] = Field(
        None, description="An optional message providing additional information"
    )


class BenchProgress(StreamingServiceResponse):
    """
    Progress of a benchmark, one message per finished job.
    Attributes:
        done (int): Finished jobs so far.
        total (int): Jobs in the grid.
        record (Optional[RunRecord]): Row of the job that just finished.
    """

    done: int = Field(0, ge=0, description="Finished jobs so far")
    total: int = Field(0, ge=0, description="Jobs in the grid")
    record: Optional[RunRecord] = Field(
        None, description="Row of the job that just finished"
    )


# endregion

__all__ = ["BenchProgress", "StreamingServiceResponse"]
