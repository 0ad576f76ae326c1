from dotenv.main import load_dotenv
from pydantic import BaseSettings

load_dotenv()


class Settings(BaseSettings):
    # physics, in units of gamma
    gamma: float = 1.0
    eta_ratio: float = 0.1
    dt: float = 1e-3
    t_max: float = 5000.0
    sample_interval: float = 0.1
    burn_in: float = 100.0
    blowup_amplitude: float = 1e6
    moment_form: str = "lindblad"
    rate_index: str = "j"

    # sampling and fitting
    base_seed: int = 0
    min_count: int = 20
    fit_probability: str = "per_config"
    max_enumeration_spins: int = 24
    feasibility_margin: float = 0.01

    # orchestration
    workers: int = 1
    output_dir: str = "runs"
    log_config: str = "logging.ini"
    log_level: str = "INFO"
    api_max_steps: int = 2_000_000

    class Config:
        env_file = ".env"
        env_file_encoding = "utf-8"


settings = Settings()
