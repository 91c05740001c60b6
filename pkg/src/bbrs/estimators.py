"""scikit-learn style wrappers around the channel simulation codes.

``fit`` takes a channel (or channel config) and builds the shared model.
``encode`` turns a message of input symbols into one bit stream, using an
independent shared seed per symbol position; ``decode`` inverts it.
``transform`` returns the simulated channel outputs for a message.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .ans import DEFAULT_PAD_BITS, BitStream
from .coder import bbrs_decode, bbrs_encode, conservative_bound, theorem1_bound
from .gamma import GammaModel, QuantizerSpec
from .pfr import appendixb_bound, pfr_decode, pfr_encode
from .samplers import GrsCode
from .validation import check_channel, check_delta, check_inputs, check_positive_int, check_seed


class _MessageCoder(BaseEstimator):
    """Shared message plumbing; subclasses supply the single-symbol codec."""

    def __init__(self, delta="1", seed=0, pad_bits=DEFAULT_PAD_BITS):
        self.delta = delta
        self.seed = seed
        self.pad_bits = pad_bits

    def _fit_model(self, channel):
        raise NotImplementedError

    def fit(self, channel, y=None):
        self.channel_ = check_channel(channel)
        self.spec_ = QuantizerSpec(check_delta(self.delta))
        self.seed_ = check_seed(self.seed)
        self._fit_model(self.channel_)
        return self

    def _symbol_seed(self, i: int):
        return self.seed_.for_trial(i)

    def new_stream(self) -> BitStream:
        check_is_fitted(self, "channel_")
        return BitStream.from_seed(self.seed_.value, self.pad_bits)

    def encode(self, X, stream: BitStream | None = None) -> BitStream:
        check_is_fitted(self, "channel_")
        xs = check_inputs(X, self.channel_)
        stream = self.new_stream() if stream is None else stream
        self.last_outputs_ = []
        for i, x in enumerate(xs):
            y = self._push(x, self._symbol_seed(i), stream)
            self.last_outputs_.append(self.channel_.y_alphabet[y])
        return stream

    def decode(self, stream: BitStream, n_symbols: int) -> list:
        check_is_fitted(self, "channel_")
        check_positive_int(n_symbols, "n_symbols")
        out = [None] * n_symbols
        for i in reversed(range(n_symbols)):
            out[i] = self.channel_.y_alphabet[self._pop(self._symbol_seed(i), stream)]
        return out

    def transform(self, X) -> np.ndarray:
        """Simulated channel outputs ``Y_i ~ P_{Y|X=X_i}``, decoded from the stream."""
        xs = list(X)
        stream = self.encode(xs)
        return np.asarray(self.decode(stream, len(xs)), dtype=object)

    def fit_transform(self, channel, X):
        return self.fit(channel).transform(X)


class BitsBackRejectionSampler(_MessageCoder):
    """Bits-back rejection sampling code for a singular channel."""

    def _fit_model(self, channel):
        self.model_ = GammaModel(channel, self.spec_)
        self.theorem1_bound_ = theorem1_bound(self.model_)
        self.conservative_bound_ = conservative_bound(self.model_)

    def _push(self, x, seed, stream):
        _, trial = bbrs_encode(self.model_, x, seed, stream)
        return trial.y

    def _pop(self, seed, stream):
        _, y = bbrs_decode(self.model_, seed, stream, check_pad=False)
        return y


class PoissonFunctionalCoder(_MessageCoder):
    """Two-part Poisson functional representation code for a singular channel."""

    def _fit_model(self, channel):
        self.model_ = GammaModel(channel, self.spec_)
        self.appendixb_bound_ = appendixb_bound(self.model_)

    def _push(self, x, seed, stream):
        _, trial = pfr_encode(self.model_, x, seed, stream)
        return trial.y

    def _pop(self, seed, stream):
        _, y = pfr_decode(self.model_, seed, stream)
        return y


class GreedyRejectionCoder(_MessageCoder):
    """GRS channel simulation code; works for any channel, singular or not."""

    def _fit_model(self, channel):
        self.code_ = GrsCode(channel)

    def _push(self, x, seed, stream):
        y, _ = self.code_.push(stream, x, seed)
        return y

    def _pop(self, seed, stream):
        return self.code_.pop(stream, seed)
