from netanomaly.sketch.kary import KarySketch, sketch_estimate, sketch_estimate_f2, sketch_update
from netanomaly.sketch.forecast import ForecastModel, forecast, forecast_path, forecast_series
from netanomaly.sketch.change import change_detect, sketch_change_detect
from netanomaly.sketch.defeat import DefeatConfig, defeat_pipeline

__all__ = [
    'KarySketch', 'sketch_estimate', 'sketch_estimate_f2', 'sketch_update', 'ForecastModel', 'forecast',
    'forecast_path', 'forecast_series', 'change_detect', 'sketch_change_detect', 'DefeatConfig',
    'defeat_pipeline',
]
