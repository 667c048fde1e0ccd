"""Engine exception types shared across modules."""


class EngineError(Exception):
    """Base class for all engine errors."""


class MotionFormatError(EngineError):
    """Payload does not parse/validate as motion JSON v1 for the canonical skeleton."""

    code = "incompatible_motion_format"


class UnknownSequenceError(EngineError):
    """Referenced sequence id does not exist in the store."""

    code = "sequence_not_found"

    def __init__(self, seq_id: str):
        super().__init__(f"sequence not found: {seq_id}")
        self.seq_id = seq_id


class SamplingDivergedError(EngineError):
    """Denoiser produced non-finite values during sampling."""

    def __init__(self, step: int, max_abs: float):
        super().__init__(f"non-finite denoiser output at step {step} (max |x| = {max_abs:.3e})")
        self.step = step
        self.max_abs = max_abs


class TrainingDivergedError(EngineError):
    """Training loss exceeded the divergence threshold; carries the loss history."""

    def __init__(self, step: int, loss: float, history: list):
        super().__init__(f"training diverged at step {step} (loss = {loss:.3e})")
        self.step = step
        self.loss = loss
        self.history = history
