import uvicorn
from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from starlette.responses import JSONResponse

from src.exceptions import IsingSamplerError
from src.routes import fits, graphs, simulations, spectra

app = FastAPI(title="ising-trajectory-sampler")


origins = ["http://127.0.0.1:8000/"]

app.add_middleware(
    CORSMiddleware,
    allow_origins=origins,
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


app.include_router(graphs.router, prefix="/api")
app.include_router(spectra.router, prefix="/api")
app.include_router(simulations.router, prefix="/api")
app.include_router(fits.router, prefix="/api")


@app.exception_handler(IsingSamplerError)
def sampler_exception_handler(request: Request, exc: IsingSamplerError):
    return JSONResponse(status_code=exc.status_code, content=exc.to_dict())


if __name__ == "__main__":
    uvicorn.run(app, host="0.0.0.0", port=8000)
