from fedcy.data.client_dataset import ClientDataset, SyntheticVideo, TrainingView
from fedcy.data.synthetic import (ClientProfile, Scenario, ScenarioConfig, SplitFractions, build_profile,
                                  generate_scenario, generate_video, reference_profile)
from fedcy.data.workflow import WorkflowModel, phase_runs, sample_phase_order, validate_workflow
