"""Model session behind the worker protocol.

The generator is a pretrained encoder-decoder conditioned by prepending the
dialect control token to the linearized input; beam search returns exactly
the requested number of candidates with their sequence log-probabilities.

The evaluator scores a (logic, text) pair by concatenating both sides with
an end-of-sequence marker, running the same encoder-decoder over the
concatenation, and squashing the max-pooled final decoder states through a
sigmoid, yielding a consistency score in [0, 1].
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import torch
from transformers import AutoModel, AutoModelForSeq2SeqLM, AutoTokenizer

logger = logging.getLogger("logicheck_bridge")


@dataclass
class WorkerSession:
    generator_model: str
    evaluator_model: str
    device: str = "cpu"
    max_input_length: int = 512
    _gen_tokenizer: object = field(init=False, repr=False, default=None)
    _gen_model: object = field(init=False, repr=False, default=None)
    _eval_tokenizer: object = field(init=False, repr=False, default=None)
    _eval_model: object = field(init=False, repr=False, default=None)

    def __post_init__(self):
        self._gen_tokenizer = AutoTokenizer.from_pretrained(self.generator_model)
        self._gen_model = (
            AutoModelForSeq2SeqLM.from_pretrained(self.generator_model)
            .to(self.device)
            .eval()
        )
        self._eval_tokenizer = AutoTokenizer.from_pretrained(self.evaluator_model)
        self._eval_model = AutoModel.from_pretrained(self.evaluator_model).to(self.device).eval()

    def _encode(self, tokenizer, text: str):
        full = tokenizer(text, return_tensors="pt")
        if full.input_ids.shape[1] > self.max_input_length:
            logger.warning(
                "input of %d tokens truncated to %d",
                full.input_ids.shape[1],
                self.max_input_length,
            )
            full = tokenizer(
                text, return_tensors="pt", truncation=True,
                max_length=self.max_input_length,
            )
        return {k: v.to(self.device) for k, v in full.items()}

    @torch.no_grad()
    def generate(self, linear_input: str, control: str, beam: int) -> list[dict]:
        """Beam candidates for a linearized parse, control token prepended."""
        if beam < 1:
            raise ValueError(f"beam must be >= 1, got {beam}")
        encoded = self._encode(self._gen_tokenizer, f"{control} {linear_input}")
        output = self._gen_model.generate(
            **encoded,
            num_beams=max(beam, 2),  # keeps sequence scores defined for beam=1
            num_return_sequences=beam,
            max_new_tokens=48,
            early_stopping=True,
            output_scores=True,
            return_dict_in_generate=True,
        )
        texts = self._gen_tokenizer.batch_decode(output.sequences, skip_special_tokens=True)
        scores = output.sequences_scores.tolist()
        return [
            {"text": text, "score": float(score)} for text, score in zip(texts, scores)
        ]

    @torch.no_grad()
    def evaluate(self, logic: str, text: str) -> float:
        """Consistency score for a (logic, text) pair, clamped to [0, 1]."""
        eos = self._eval_tokenizer.eos_token or ""
        encoded = self._encode(self._eval_tokenizer, f"{logic} {eos} {text}".strip())
        output = self._eval_model(
            input_ids=encoded["input_ids"],
            attention_mask=encoded.get("attention_mask"),
            decoder_input_ids=encoded["input_ids"],
        )
        pooled = output.last_hidden_state.max()
        gamma = torch.sigmoid(pooled).item()
        return min(1.0, max(0.0, gamma))
