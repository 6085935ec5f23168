from session.config import ConfigError, SessionConfig, SessionError, check_pair, load_config
from session.records import SessionRecord, load_record, save_record
from session.runner import StageError, build_abstraction, make_backend, run_direct, run_hypothesis
