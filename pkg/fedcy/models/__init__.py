from fedcy.models.archival import Checkpoint, load_params, save_params
from fedcy.models.phase_recognizer import (ModelConfig, ParameterSet, PhaseRecognizer, classify,
                                           extract_features, init_params, parameter_shapes)
