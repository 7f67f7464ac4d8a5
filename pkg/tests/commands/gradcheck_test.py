# pylint: disable=no-self-use,invalid-name
import pytest

from fedcy.commands import cmd_gradcheck, main
from fedcy.commands.gradcheck import COMPONENTS, ComponentResult, check_component, format_results, select_components
from fedcy.common.checks import ConfigurationError


class TestGradcheck:
    def test_selectors(self):
        assert select_components("ntxent") == ["ntxent"]
        assert select_components("engine") == ["mlp", "primitives", "extract_features"]
        assert "labeled_objective" in select_components("losses")
        assert select_components("all") == list(COMPONENTS)

    def test_unknown_selector(self):
        with pytest.raises(ConfigurationError):
            select_components("relu")

    @pytest.mark.parametrize("component", list(COMPONENTS))
    def test_every_component_passes(self, component):
        result = check_component(component, seed=0, instances=5)
        assert result.passed, result

    def test_injected_fault_is_caught(self):
        results = cmd_gradcheck("ntxent", instances=3, inject_fault=True)
        assert [result.passed for result in results] == [False]

    def test_instances_must_be_positive(self):
        with pytest.raises(ConfigurationError):
            cmd_gradcheck("ntxent", instances=0)

    def test_exit_status(self, capsys):
        assert main(argv=["gradcheck", "--component", "ntxent", "--instances", "3"]) == 0
        assert "ntxent" in capsys.readouterr().out
        assert main(argv=["gradcheck", "--component", "ntxent", "--instances", "3", "--inject-fault"]) == 1
        assert "FAIL" in capsys.readouterr().out
        assert main(argv=["gradcheck", "--component", "ntxent", "--instances", "0"]) == 1

    def test_unknown_component_on_the_command_line(self):
        with pytest.raises(SystemExit):
            main(argv=["gradcheck", "--component", "relu"])

    def test_report_table(self):
        text = format_results([ComponentResult("ntxent", 50, 3e-9, 1e-4),
                               ComponentResult("tcc_pair_loss", 50, 2e-3, 1e-4)])
        lines = text.splitlines()
        assert lines[0].split() == ["component", "instances", "max_rel_error", "status"]
        assert lines[1].split()[-1] == "pass"
        assert lines[2].split()[-1] == "FAIL"
