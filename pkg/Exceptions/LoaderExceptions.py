class LoaderException(Exception):
    """Raised when an output artifact cannot be written"""

    def __init__(self, output_path):
        self.output_path = output_path
        super().__init__(f"Failed to write output artifact {output_path}")
