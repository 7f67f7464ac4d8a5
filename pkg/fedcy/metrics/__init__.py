from fedcy.metrics.evaluation import EvaluationReport, aggregate_runs, client_f1, evaluate_each, evaluate_scenario
from fedcy.metrics.phase_f1 import PhaseF1, macro_f1
