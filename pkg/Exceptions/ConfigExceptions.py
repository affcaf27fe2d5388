class ConfigError(Exception):
    """Raised when a configuration key is unknown, missing or carries an invalid value"""

    def __init__(self, key: str, reason: str):
        self.key = key
        self.reason = reason
        super().__init__(f"Invalid config key '{self.key}': {self.reason}")


class ParseError(Exception):
    """Raised when a text artifact (CSV, config, checkpoint) cannot be parsed"""

    def __init__(self, path: str, line: int, reason: str):
        self.path = path
        self.line = line
        self.reason = reason
        super().__init__(f"Parse error in {self.path} at line {self.line}: {self.reason}")


class InputFileDoesNotExist(Exception):
    """Raised when the specified input file cannot be found at the given path"""

    def __init__(self, input_path: str):
        self.input_path = input_path
        super().__init__(f"Input file does not exist: {self.input_path}")
