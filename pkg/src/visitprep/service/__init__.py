"""HTTP boundary: FastAPI app, session store, ingest jobs, configuration."""
