from .helpers import format_decimal, parse_symbol, trial_rng
