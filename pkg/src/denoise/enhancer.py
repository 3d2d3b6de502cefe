"""
Inference chain: noisy waveform in, enhanced waveform out.

This module provides the Enhancer class, which orchestrates analysis,
feature assembly, the network forward pass and overlap-add
reconstruction. The same class runs the Log-MMSE baseline when it is
built without a model, so both systems share one reconstruction path and
one debug trace format.

Example:
    >>> from denoise import Enhancer, FeatureConfig, StftConfig, load_model
    >>> enhancer = Enhancer(load_model("model.json"), FeatureConfig(), StftConfig())
    >>> enhanced = enhancer.enhance(noisy)

Debug Mode Example:
    >>> enhanced = enhancer.enhance(noisy, debug=True)
    >>> print(enhancer.get_trace().summary())
"""

from typing import Optional

import numpy as np

from .dsp import Analysis, analyze, reconstruct
from .errors import DimMismatch
from .features import FeatureConfig, build_inputs, feature_dim
from .logmmse import LogMmseConfig, logmmse_estimate
from .mlp import MlpModel, forward
from .models import AudioSignal, LogPowerSpectrogram, StftConfig
from .noise_estimation import TrackerConfig
from .tracer import EnhanceTrace


class Enhancer:
    """
    Enhance noisy utterances with a trained network or the Log-MMSE baseline.

    Enhancement is a pure function of the configuration and the input, so
    one Enhancer can be shared across threads as long as debug tracing is
    off.
    """

    def __init__(
        self,
        model: Optional[MlpModel],
        feature_config: Optional[FeatureConfig] = None,
        stft_config: Optional[StftConfig] = None,
        tracker_config: Optional[TrackerConfig] = None,
        logmmse_config: Optional[LogMmseConfig] = None,
    ):
        """
        Initialize the enhancer.

        Args:
            model: Trained network, or None for the Log-MMSE baseline.
            feature_config: Input layout the model was trained with.
            stft_config: Analysis parameters.
            tracker_config: Running noise tracker parameters (bed inputs and
                the baseline's noise PSD).
            logmmse_config: Baseline parameters.

        Raises:
            DimMismatch: The model's dimensions do not match the input mode,
                context radius and bin count.
        """
        self.model = model
        self.feature_config = feature_config or FeatureConfig()
        self.stft_config = stft_config or StftConfig()
        self.tracker_config = tracker_config or TrackerConfig()
        self.logmmse_config = logmmse_config or LogMmseConfig()

        if model is not None:
            n_bins = self.stft_config.n_bins
            expected = feature_dim(
                self.feature_config.input_mode, self.feature_config.tau, n_bins
            )
            if model.input_dim != expected or model.output_dim != n_bins:
                raise DimMismatch(
                    f"model maps {model.input_dim} -> {model.output_dim}, but mode "
                    f"'{self.feature_config.input_mode}' with tau="
                    f"{self.feature_config.tau} needs {expected} -> {n_bins}"
                )

        self._last_trace: Optional[EnhanceTrace] = None

    @property
    def method(self) -> str:
        return "logmmse" if self.model is None else "dnn"

    def get_trace(self) -> Optional[EnhanceTrace]:
        """
        Get the trace from the last enhance() call with debug=True.

        Returns:
            The EnhanceTrace from the last debug run, or None if debug mode
            was not used or enhance() hasn't been called.
        """
        return self._last_trace

    def enhance(self, noisy: AudioSignal, debug: bool = False) -> AudioSignal:
        """
        Enhance one utterance.

        Args:
            noisy: Noisy waveform.
            debug: If True, record every pipeline stage. Access the trace
                via get_trace() afterwards.

        Returns:
            Enhanced waveform with exactly len(noisy) samples.

        Raises:
            SignalTooShort: The input is shorter than one analysis window.
        """
        trace: Optional[EnhanceTrace] = None
        if debug:
            trace = EnhanceTrace(method=self.method, input_length=len(noisy))
        self._last_trace = trace

        analysis = analyze(noisy, self.stft_config)
        if trace:
            trace.add_stage(
                "stft",
                {
                    "frames": analysis.log_power.n_frames,
                    "bins": analysis.log_power.n_bins,
                    "mean_log_power": float(analysis.log_power.values.mean()),
                },
                analysis.log_power.values,
            )

        if self.model is None:
            estimate = self._baseline_log_power(analysis, trace)
        else:
            estimate = self._network_log_power(analysis, trace)

        enhanced = reconstruct(estimate, analysis.phase, self.stft_config, len(noisy))
        if trace:
            trace.add_stage(
                "reconstruct",
                {
                    "output_length": len(enhanced),
                    "input_power": noisy.power(),
                    "output_power": enhanced.power(),
                },
                enhanced.samples,
            )
        return enhanced

    def _network_log_power(
        self, analysis: Analysis, trace: Optional[EnhanceTrace]
    ) -> LogPowerSpectrogram:
        inputs = build_inputs(
            analysis, self.feature_config, self.stft_config, self.tracker_config
        )
        if trace:
            trace.add_stage(
                "features",
                {
                    "input_mode": self.feature_config.input_mode,
                    "tau": self.feature_config.tau,
                    "shape": inputs.shape,
                },
                inputs,
            )

        norm = self.model.norm()
        normalized = forward(self.model, norm.normalize_inputs(inputs))
        output = norm.denormalize_targets(normalized)
        if trace:
            trace.add_stage(
                "network",
                {
                    "layer_dims": list(self.model.layer_dims),
                    "mean_output": float(output.mean()),
                },
                output,
            )
        return LogPowerSpectrogram(values=output, config=self.stft_config)

    def _baseline_log_power(
        self, analysis: Analysis, trace: Optional[EnhanceTrace]
    ) -> LogPowerSpectrogram:
        result = logmmse_estimate(
            analysis, self.stft_config, self.logmmse_config, self.tracker_config
        )
        if trace:
            floor = self.stft_config.power_floor
            trace.add_stage(
                "noise",
                {"mean_noise_power": float(result.noise_power.mean())},
                np.log(np.maximum(result.noise_power, floor)),
            )
            trace.add_stage(
                "gain",
                {
                    "min_gain": float(result.gains.min()),
                    "mean_gain": float(result.gains.mean()),
                },
                result.gains,
            )
        return result.log_power


def enhance(
    model: MlpModel,
    noisy: AudioSignal,
    feat_cfg: FeatureConfig,
    stft_cfg: StftConfig,
    tracker_cfg: Optional[TrackerConfig] = None,
) -> AudioSignal:
    """
    Enhance one utterance with a trained network.

    Raises:
        DimMismatch: The model does not fit the configured input mode.
        SignalTooShort: The input is shorter than one analysis window.
    """
    return Enhancer(model, feat_cfg, stft_cfg, tracker_cfg).enhance(noisy)
