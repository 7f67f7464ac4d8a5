from fedcy.predictors.phase_predictor import PhasePredictor
