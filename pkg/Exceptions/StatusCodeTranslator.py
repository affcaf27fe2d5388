from typing import List, Tuple

from Constants import EXIT_RUNTIME_ERROR, EXIT_USER_ERROR, user_input_exceptions


class StatusCodeExceptionTranslator:
    """
    Converts exceptions raised anywhere in the toolkit into a process exit code and a
    human-readable message. Exceptions caused by user input (bad config, unparsable
    files, missing files) map to exit code 1; everything else, including numerical
    failures, maps to exit code 2.
    """

    def __init__(self, exceptions: List[type] = None):
        self.user_exceptions = exceptions if exceptions is not None else user_input_exceptions

    def translate_custom_exceptions(self, e: Exception) -> Tuple[int, str]:
        """
        Checks whether the exception is one of the recognised user-input exceptions.

        :param e: The exception instance to be translated.
        :return: A tuple containing the status code and error message:
                - status_code (int): 1 for user-input exceptions, 2 for runtime failures
                - message (str): str(e) for user-input exceptions,
                                 "Unexpected failure: <exception_details>" otherwise
        """
        if isinstance(e, tuple(self.user_exceptions)):
            return EXIT_USER_ERROR, str(e)
        return EXIT_RUNTIME_ERROR, f"Unexpected failure: {e}"
