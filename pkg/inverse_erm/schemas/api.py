from pydantic import BaseModel, Field
from typing import Any, Dict, List, Optional


class EstimateRequest(BaseModel):
    # section -> key -> value, the same layout as an experiment file
    config: Dict[str, Dict[str, Any]]
    seed: Optional[int] = None
    n: Optional[float] = Field(None, gt=1)


class ScalingsRequest(BaseModel):
    config: Dict[str, Dict[str, Any]]
    delta_grid: Optional[List[float]] = None
