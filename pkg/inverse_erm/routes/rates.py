from fastapi import APIRouter, Query
from fastapi.responses import JSONResponse
from typing import Optional
import logging

from inverse_erm.controllers.experiment import ExperimentController

logger = logging.getLogger(__name__)
router = APIRouter()


@router.get("")
async def get_rates(
    s: Optional[float] = Query(None, gt=0),
    q: Optional[float] = Query(None, ge=0),
    d: int = Query(1, ge=1),
    additive: Optional[str] = Query(None),
    radon: bool = Query(False),
):
    '''
        Convergence-rate exponents for a deconvolution problem or an additive model.
    '''
    logger.debug(f"Rates requested - s: {s}, q: {q}, d: {d}, additive: {additive}")
    table = await ExperimentController.get_rates(s, q, d, additive, radon)
    return JSONResponse(status_code=200, content={'success': True, 'content': table})
