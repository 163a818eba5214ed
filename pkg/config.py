from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    """
    Configuration for the exponentially S-number toolkit

    Every field can be overridden with an EXPO_-prefixed environment variable
    or a line in .env, e.g. EXPO_SIEVE_CAP=20000000.
    """

    # Factor sieve
    sieve_cap: int = 100_000_000
    sieve_block_size: int = 1 << 20

    # Euler products
    working_precision_bits: int = 80
    precision_backend: str = "auto"
    log_product_threshold: int = 100_000
    default_prime_limit: int = 1_000_000
    default_eps: float = 1e-9

    # Sum form (powerful numbers)
    sum_form_a_limit: int = 1_000_000
    tail_validation_limit: int = 100_000_000
    powerful_tail_constant: float = 5.0
    powerful_envelope_constant: float = 10.0

    # Verification harness
    verify_prime_limit: int = 10_000_000
    verify_max_error: float = 1e-7

    default_output_format: str = "json"
    log_level: str = "INFO"

    class Config:
        env_file = ".env"
        env_prefix = "EXPO_"
        case_sensitive = False


settings = Settings()
