# src/serving/api_server.py
import logging
import os
from typing import Dict, List, Optional

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from ..errors import DimensionMismatchError
from ..estimation.vinefit import VineDensityModel, describe_model, eval_vine_density

logger = logging.getLogger(__name__)


# Models
class DensityRequest(BaseModel):
    points: List[List[float]]


class DensityResponse(BaseModel):
    densities: List[float]


class HealthResponse(BaseModel):
    status: str
    d: int
    n: int


def create_app(model: VineDensityModel, threads: int = 1) -> FastAPI:
    """HTTP density service over one fitted model."""
    app = FastAPI(title="Vine Density API")

    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_credentials=True,
        allow_methods=["*"],
        allow_headers=["*"],
    )

    # Routes
    @app.get("/health", response_model=HealthResponse)
    async def health_check():
        """Health check endpoint"""
        return HealthResponse(status="ok", d=model.d, n=model.n)

    @app.get("/model")
    async def get_model() -> Dict:
        """Structure summary of the served model"""
        return describe_model(model)

    @app.post("/density", response_model=DensityResponse)
    def post_density(request: DensityRequest):
        """Joint density at each submitted point"""
        try:
            points = np.asarray(request.points, dtype=float)
            if points.size == 0:
                return DensityResponse(densities=[])
            densities = eval_vine_density(model, points, threads=threads)
        except (DimensionMismatchError, ValueError) as e:
            logger.warning(f"Rejected density request: {e}")
            raise HTTPException(status_code=422, detail=str(e))
        return DensityResponse(densities=densities.tolist())

    return app


def app_from_env(model_path: Optional[str] = None) -> FastAPI:
    """Build the app from VINEKDE_MODEL for `uvicorn --factory`."""
    from ..storage.model_store import load_model

    path = model_path or os.environ.get("VINEKDE_MODEL")
    if not path:
        raise RuntimeError("VINEKDE_MODEL is not set")
    return create_app(load_model(path))
