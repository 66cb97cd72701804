import logging

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

from src.conf.config import config
from src.routes import simulations
from src.services.scenarios import SCENARIO_NAMES

logging.basicConfig(level=config.LOG_LEVEL, format="%(asctime)s %(levelname)s %(name)s: %(message)s")

app = FastAPI(title="tangent-body")

origins = ["*"]
app.add_middleware(
    CORSMiddleware,
    allow_origins=origins,
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

app.include_router(simulations.router, prefix="/api")


@app.get("/api/healthchecker")
def healthchecker():
    """
    The healthchecker function confirms the service is up and reports the built-in scenarios.

    :return: A dictionary with a welcome message and the scenario names
    """
    return {"message": "Welcome to tangent-body!", "scenarios": list(SCENARIO_NAMES)}
