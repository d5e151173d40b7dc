import logging
from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware
from homogen.config.settings import settings
from homogen.controllers.homogenization import router as homogenization_router

logging.basicConfig(level=settings.LOG_LEVEL)
app = FastAPI(title="Nonlocal Homogenization Engine")

app.add_middleware(
    CORSMiddleware,
    allow_origins=[settings.FRONTEND_URL],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

app.include_router(homogenization_router, prefix="/api")

@app.get("/health")
def health_check():
    return {"status": "healthy"}
