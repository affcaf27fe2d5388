import numpy as np
import pytest

from AdvShift.ConfigLoader import ConfigLoader, parse_taus
from AdvShift.DataModels.LabelDistribution import LabelDistribution
from AdvShift.Loader import Loader
from AdvShift.Trainer import theory_total_steps
from Exceptions.ConfigExceptions import ConfigError, InputFileDoesNotExist, ParseError
from tests.conftest import CONFIG_DIR


class TestLoad:
    def setup_method(self):
        self.loader = ConfigLoader()

    def test_shipped_advshift_config(self):
        config = self.loader.load(str(CONFIG_DIR / "advshift.cfg"))
        assert config.method == "advshift"
        assert config.adversary.r == 0.1
        assert config.adversary.gamma_c == pytest.approx(10.0)
        assert config.batch_size == 64

    def test_comments_and_blank_lines(self, write_text):
        path = write_text("run.cfg", "# header\n\nmethod = erm   # trailing\nepochs=3\n")
        config = self.loader.load(path)
        assert (config.method, config.epochs) == ("erm", 3)

    def test_fixed_distribution(self, write_text):
        config = self.loader.load(write_text("run.cfg", "method = fixed\nfixed_pi = 0.5, 0.25, 0.25\n"))
        assert config.fixed_pi.probs.tolist() == [0.5, 0.25, 0.25]

    def test_fixed_distribution_from_witness_file(self, write_text, tmp_path):
        """Test that a relative witness path is read next to the config file."""
        Loader().write_witness(LabelDistribution([0.1, 0.2, 0.7]), tmp_path / "witness_1.csv")
        config = self.loader.load(write_text("run.cfg", "method = fixed\nfixed_pi = witness_1.csv\n"))
        np.testing.assert_allclose(config.fixed_pi.probs, [0.1, 0.2, 0.7])

    def test_fixed_distribution_from_absolute_witness_path(self, write_text, tmp_path):
        witness = tmp_path / "eval" / "witness_0.csv"
        witness.parent.mkdir()
        Loader().write_witness(LabelDistribution([0.25, 0.75]), witness)
        config = self.loader.load(write_text("run.cfg", f"method = fixed\nfixed_pi = {witness}\n"))
        np.testing.assert_allclose(config.fixed_pi.probs, [0.25, 0.75])

    def test_missing_witness_file_names_the_key(self, write_text):
        with pytest.raises(ConfigError) as exc:
            self.loader.load(write_text("run.cfg", "method = fixed\nfixed_pi = absent.csv\n"))
        assert exc.value.key == "fixed_pi"
        assert "absent.csv" in exc.value.reason

    def test_malformed_witness_file(self, write_text):
        write_text("witness_0.csv", "class_id,prob\n0,0.5\n2,0.5\n")
        with pytest.raises(ParseError) as exc:
            self.loader.load(write_text("run.cfg", "method = fixed\nfixed_pi = witness_0.csv\n"))
        assert exc.value.line == 3

    def test_record_params_flag(self, write_text):
        assert self.loader.load(write_text("run.cfg", "record_params = yes\n")).record_params

    def test_missing_file(self, tmp_path):
        with pytest.raises(InputFileDoesNotExist):
            self.loader.load(str(tmp_path / "absent.cfg"))

    @pytest.mark.parametrize(
        "content, line",
        [("method erm\n", 1), ("epochs = 3\n = 4\n", 2), ("epochs = 3\nepochs = 4\n", 2)],
    )
    def test_syntax_errors(self, write_text, content, line):
        with pytest.raises(ParseError) as exc:
            self.loader.load(write_text("run.cfg", content))
        assert exc.value.line == line

    @pytest.mark.parametrize(
        "content, key",
        [
            ("learning_rate = 0.1\n", "learning_rate"),
            ("r = -0.5\n", "r"),
            ("epochs = ten\n", "epochs"),
            ("theta_lr = nan\n", "theta_lr"),
            ("method = sgd\n", "method"),
            ("fixed_pi = 0.5, 0.6\nmethod = fixed\n", "fixed_pi"),
            ("record_params = maybe\n", "record_params"),
            ("schedule = cosine\n", "schedule"),
            ("seed = -3\n", "seed"),
        ],
    )
    def test_invalid_values_name_the_key(self, write_text, content, key):
        with pytest.raises(ConfigError) as exc:
            self.loader.load(write_text("run.cfg", content))
        assert exc.value.key == key


class TestTheorySchedule:
    def setup_method(self):
        self.loader = ConfigLoader()

    def test_shipped_theory_config(self):
        config = self.loader.load(str(CONFIG_DIR / "theory.cfg"), num_examples=600)
        total = theory_total_steps(600, 10)
        assert config.theta_lr == pytest.approx(total ** -0.75)
        assert config.adversary.lambda_ == pytest.approx(total ** -0.25)
        assert config.adversary.epsilon == 0.01

    def test_needs_training_size(self):
        with pytest.raises(ConfigError) as exc:
            self.loader.load(str(CONFIG_DIR / "theory.cfg"))
        assert exc.value.key == "schedule"

    @pytest.mark.parametrize("key", ["theta_lr = 0.1", "batch = 8", "lambda = 0.5", "gamma_c = 1"])
    def test_schedule_owned_keys(self, write_text, key):
        with pytest.raises(ConfigError):
            self.loader.load(write_text("run.cfg", f"schedule = theory\n{key}\n"), num_examples=100)


class TestLoadSweep:
    def setup_method(self):
        self.loader = ConfigLoader()

    def test_shipped_sweep(self):
        spec = self.loader.load_sweep(str(CONFIG_DIR / "sweep.cfg"))
        jobs = spec.jobs()
        assert len(jobs) == 2 * 5
        assert [job.method for job in jobs[:5]] == ["erm"] * 5
        assert [job.seed for job in jobs[:5]] == [1, 2, 3, 4, 5]
        assert spec.taus == [0.0, 1.0, 2.0]
        assert jobs[0].values["epochs"] == "20"

    def test_defaults(self, write_text):
        spec = self.loader.load_sweep(write_text("sweep.cfg", "epochs = 2\n"))
        (job,) = spec.jobs()
        assert (job.method, job.r, job.seed) == ("advshift", 0.1, 0)
        assert spec.taus == [0.0]

    def test_fixed_witness_is_resolved_for_every_job(self, write_text, tmp_path):
        Loader().write_witness(LabelDistribution([0.6, 0.4]), tmp_path / "witness_2.csv")
        spec = self.loader.load_sweep(write_text("sweep.cfg", "methods = fixed\nfixed_pi = witness_2.csv\nseeds = 1, 2\n"))
        for job in spec.jobs():
            assert job.values["fixed_pi"] == str(tmp_path / "witness_2.csv")
            np.testing.assert_allclose(self.loader.build_config(job.values).fixed_pi.probs, [0.6, 0.4])

    def test_theory_cells_are_built_for_the_training_size(self, write_text):
        path = write_text("sweep.cfg", "schedule = theory\nepochs = 2\nseeds = 1, 2\n")
        spec = self.loader.load_sweep(path, num_examples=400)
        assert len(spec.jobs()) == 2
        with pytest.raises(ConfigError) as exc:
            self.loader.load_sweep(path)
        assert exc.value.key == "schedule"

    def test_jobs_build_configs(self, write_text):
        spec = self.loader.load_sweep(write_text("sweep.cfg", "methods = advshift\nepsilon = 0, 0.1\n"))
        configs = [self.loader.build_config(job.values) for job in spec.jobs()]
        assert [c.adversary.epsilon for c in configs] == [0.0, 0.1]

    @pytest.mark.parametrize(
        "content, key",
        [
            ("method = erm\n", "method"),
            ("seed = 1\n", "seed"),
            ("methods = erm, dro\n", "method"),
            ("r = 0.1, -1\n", "r"),
            ("taus = 0, 2, 1\n", "taus"),
            ("seeds = 1,,2\n", "seeds"),
            ("workers = 4\n", "workers"),
        ],
    )
    def test_invalid_sweeps(self, write_text, content, key):
        with pytest.raises(ConfigError) as exc:
            self.loader.load_sweep(write_text("sweep.cfg", content))
        assert exc.value.key == key


class TestParseTaus:
    def test_increasing_thresholds(self):
        assert parse_taus("0, 0.5,2") == [0.0, 0.5, 2.0]

    @pytest.mark.parametrize("text", ["-1", "1, 1", "a", ""])
    def test_invalid_thresholds(self, text):
        with pytest.raises(ConfigError):
            parse_taus(text)
