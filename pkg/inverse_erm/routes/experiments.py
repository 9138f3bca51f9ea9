from fastapi import APIRouter, Query
from fastapi.responses import JSONResponse
from typing import Literal
import logging

from inverse_erm.controllers.experiment import ExperimentController
from inverse_erm.schemas.api import EstimateRequest, ScalingsRequest
from inverse_erm.schemas.experiment import parse_experiment_config

logger = logging.getLogger(__name__)
router = APIRouter()


@router.post("/estimate")
async def estimate(request: EstimateRequest):
    '''
        Simulate one observation from the posted configuration and estimate it.
    '''
    config = parse_experiment_config(request.config)
    summary = await ExperimentController.estimate(config, request.seed, request.n)
    return JSONResponse(status_code=200, content={'success': True, 'content': summary.model_dump(mode="json")})


@router.post("/scalings")
async def scalings(request: ScalingsRequest):
    '''
        Net and packing scaling slopes over a delta grid.
    '''
    config = parse_experiment_config(request.config)
    report = await ExperimentController.scalings(config, request.delta_grid)
    content = report.model_dump(mode="json")
    content["passed"] = report.passed
    return JSONResponse(status_code=200, content={'success': True, 'content': content})


@router.get("/verify")
async def verify(level: Literal["fast", "full"] = Query("fast")):
    '''
        Run the oracle verification suite.
    '''
    report = await ExperimentController.verify(level)
    content = report.model_dump(mode="json")
    content["passed"] = report.passed
    logger.info(f"Verification ({level}) via API: {'PASS' if report.passed else 'FAIL'}")
    return JSONResponse(status_code=200, content={'success': True, 'content': content})
