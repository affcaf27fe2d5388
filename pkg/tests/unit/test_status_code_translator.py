from Constants import EXIT_RUNTIME_ERROR, EXIT_USER_ERROR
from Exceptions.ConfigExceptions import ConfigError, InputFileDoesNotExist, ParseError
from Exceptions.DomainExceptions import DomainError, NonConvergence
from Exceptions.LoaderExceptions import LoaderException
from Exceptions.StatusCodeTranslator import StatusCodeExceptionTranslator


class TestStatusCodeExceptionTranslator:
    def setup_method(self):
        self.translator = StatusCodeExceptionTranslator()

    def test_user_input_errors_exit_with_one(self):
        for error in (
            ConfigError("r", "must be non-negative"),
            ParseError("data.csv", 3, "expected 3 fields"),
            InputFileDoesNotExist("missing.cfg"),
            LoaderException("/readonly/out.csv"),
        ):
            code, message = self.translator.translate_custom_exceptions(error)
            assert code == EXIT_USER_ERROR
            assert message == str(error)

    def test_numerical_failures_exit_with_two(self):
        code, message = self.translator.translate_custom_exceptions(NonConvergence("kl_ball_project", 200, 0.5))
        assert code == EXIT_RUNTIME_ERROR
        assert message.startswith("Unexpected failure: kl_ball_project did not converge")

    def test_custom_exception_list(self):
        translator = StatusCodeExceptionTranslator([DomainError])
        assert translator.translate_custom_exceptions(DomainError("x"))[0] == EXIT_USER_ERROR
        assert translator.translate_custom_exceptions(ConfigError("r", "bad"))[0] == EXIT_RUNTIME_ERROR

    def test_messages_name_the_offending_input(self):
        assert str(ConfigError("clip", "must be positive")) == "Invalid config key 'clip': must be positive"
        assert str(ParseError("d.csv", 4, "bad")) == "Parse error in d.csv at line 4: bad"
