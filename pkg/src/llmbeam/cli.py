"""Command-line surface: decode, eval, sweep, synth, align-dump.

Configuration precedence: command-line flags beat the config file, which
beats the preset, which beats built-in defaults. Every option can also be
set through LLMBEAM_-prefixed environment variables.

Exit codes: 0 ok, 2 configuration error, 3 reference/hypothesis mismatch,
4 remote-LM protocol failure.
"""

from __future__ import annotations

import csv
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import click

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import synth as synthmod
from .baselines import greedy_decode, prefix_beam_decode
from .decoder import DecoderConfig, LlmBeamDecoder
from .emissions import CharAlphabet, EmissionMatrix, load_emissions, save_emissions
from .errors import (
    ConfigError,
    DataMismatchError,
    LlmBeamError,
    RemoteLmError,
)
from .evaluate import evaluate_corpus
from .lm import NgramLm, RemoteLm, UniformLm, load_arpa, train_ngram
from .presets import DEFAULT_PRESET, PRESETS, preset_weights
from .vocab import Vocabulary, load_vocab

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_REMOTE = 4


@click.group(context_settings={"auto_envvar_prefix": "LLMBEAM"})
def main():
    """LLM-guided beam decoding for CTC emission matrices."""


def _load_config_file(path: Optional[str]) -> Dict:
    if not path:
        return {}
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc


def _build_decoder_config(
    preset: Optional[str],
    file_cfg: Dict,
    flag_overrides: Dict[str, Optional[float]],
) -> DecoderConfig:
    alpha, beta = preset_weights(preset or DEFAULT_PRESET)
    values = {"alpha": alpha, "beta": beta}
    for key in (
        "alpha",
        "beta",
        "beam_width",
        "candidates_k",
        "max_iterations",
        "acoustic_floor",
        "lookahead_frames",
        "eos_margin",
    ):
        if key in file_cfg:
            values[key] = file_cfg[key]
        if flag_overrides.get(key) is not None:
            values[key] = flag_overrides[key]
    return DecoderConfig(**values)


def _collect_emission_files(emissions_dir: str) -> List[Path]:
    root = Path(emissions_dir)
    if root.is_file():
        return [root]
    files = sorted(root.glob("*.ctce")) + sorted(root.glob("*.txt"))
    return files


def _load_matrix(path: Path) -> EmissionMatrix:
    fmt = "text" if path.suffix == ".txt" else "binary"
    return load_emissions(path, format=fmt)


def _make_lm(spec: str, vocabulary: Vocabulary, timeout_s: float):
    if spec == "uniform":
        return UniformLm(vocabulary)
    if spec.startswith("ngram:"):
        return NgramLm(vocabulary, load_arpa(spec[len("ngram:") :]))
    if spec.startswith("remote:"):
        return RemoteLm(spec[len("remote:") :], vocabulary, timeout_s=timeout_s)
    raise ConfigError(
        f"unknown LM spec {spec!r}; use uniform, ngram:PATH, or remote:URL"
    )


def _validate_decode_inputs(emissions_dir, vocab_path, lm_spec) -> List[str]:
    problems = []
    if not Path(emissions_dir).exists():
        problems.append(f"emissions path does not exist: {emissions_dir}")
    elif not _collect_emission_files(emissions_dir):
        problems.append(f"no .ctce or .txt emission files under {emissions_dir}")
    if not Path(vocab_path).exists():
        problems.append(f"vocab path does not exist: {vocab_path}")
    if lm_spec.startswith("ngram:") and not Path(lm_spec[6:]).exists():
        problems.append(f"ARPA file does not exist: {lm_spec[6:]}")
    return problems


def _fail_config(problems: List[str]):
    for p in problems:
        click.echo(f"config error: {p}", err=True)
    sys.exit(EXIT_CONFIG)


def _decode_records(
    files: List[Path],
    vocabulary: Vocabulary,
    lm,
    config: DecoderConfig,
    decoder_kind: str,
    workers: int,
    ngram_model=None,
) -> List[Dict]:
    def run_one(path: Path) -> Dict:
        matrix = _load_matrix(path)
        utt_id = path.stem
        if decoder_kind == "greedy":
            return {"utt_id": utt_id, "text": greedy_decode(matrix)}
        if decoder_kind == "prefix":
            text = prefix_beam_decode(matrix, ngram=ngram_model)
            return {"utt_id": utt_id, "text": text}
        decoder = LlmBeamDecoder(lm, vocabulary, config)
        if hasattr(lm, "clear_cache"):
            lm.clear_cache()
        result = decoder.decode(matrix)
        best = result.best
        token_records = []
        for token_id, start in zip(best.tokens, best.alignments):
            token = vocabulary[token_id]
            token_records.append(
                {
                    "text": ("▁" if token.word_initial else "") + token.text,
                    "start_ms": start * matrix.frame_duration_ms,
                    "end_ms": None,
                }
            )
        # fill end_ms from the next token's start (last token ends at end_frame)
        for i, rec in enumerate(token_records):
            if i + 1 < len(token_records):
                rec["end_ms"] = token_records[i + 1]["start_ms"]
            else:
                rec["end_ms"] = best.end_frame * matrix.frame_duration_ms
        return {
            "utt_id": utt_id,
            "text": decoder.text_of(best),
            "score": best.combined_score,
            "acoustic_score": best.acoustic_score,
            "lm_score": best.lm_score,
            "tokens": token_records,
            "stop_reason": best.stop_reason,
            "iterations": result.iterations,
        }

    if workers <= 1:
        return [run_one(p) for p in files]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run_one, files))  # preserves input order


_decode_options = [
    click.option("--emissions", "emissions_dir", required=True, help="Emission file or directory (*.ctce binary, *.txt text)."),
    click.option("--vocab", "vocab_path", required=True, help="Token list file."),
    click.option("--lm", "lm_spec", default="uniform", show_default=True, help="uniform | ngram:PATH | remote:URL"),
    click.option("--preset", type=click.Choice(sorted(PRESETS)), default=None, help="Dataset x LM hyperparameter preset."),
    click.option("--config", "config_path", default=None, help="TOML config file."),
    click.option("--alpha", type=float, default=None),
    click.option("--beta", type=float, default=None),
    click.option("--beam-width", "beam_width", type=int, default=None),
    click.option("--k", "candidates_k", type=int, default=None),
    click.option("--max-iterations", type=int, default=None),
    click.option("--acoustic-floor", type=float, default=None),
    click.option("--lookahead", "lookahead_frames", type=int, default=None),
    click.option("--eos-margin", type=float, default=None),
    click.option("--timeout", "timeout_s", type=float, default=30.0, show_default=True, help="Remote LM timeout (seconds)."),
    click.option("--workers", type=int, default=1, show_default=True),
]


def _with_decode_options(fn):
    for opt in reversed(_decode_options):
        fn = opt(fn)
    return fn


def _setup_decode(emissions_dir, vocab_path, lm_spec, preset, config_path, timeout_s, overrides):
    problems = _validate_decode_inputs(emissions_dir, vocab_path, lm_spec)
    if problems:
        _fail_config(problems)
    file_cfg = _load_config_file(config_path)
    preset = preset or file_cfg.get("preset")
    config = _build_decoder_config(preset, file_cfg, overrides)
    files = _collect_emission_files(emissions_dir)
    alphabet = _load_matrix(files[0]).alphabet
    vocabulary = load_vocab(vocab_path, alphabet)
    lm = _make_lm(lm_spec, vocabulary, timeout_s)
    return files, vocabulary, lm, config


@main.command("decode")
@_with_decode_options
@click.option("--decoder", "decoder_kind", type=click.Choice(["llm", "greedy", "prefix"]), default="llm", show_default=True)
@click.option("--output", "output_path", default=None, help="JSONL output (default stdout).")
def cmd_decode(
    emissions_dir, vocab_path, lm_spec, preset, config_path, alpha, beta,
    beam_width, candidates_k, max_iterations, acoustic_floor, lookahead_frames,
    eos_margin, timeout_s, workers, decoder_kind, output_path,
):
    """Decode emission files into transcription records."""
    overrides = {
        "alpha": alpha, "beta": beta, "beam_width": beam_width,
        "candidates_k": candidates_k, "max_iterations": max_iterations,
        "acoustic_floor": acoustic_floor, "lookahead_frames": lookahead_frames,
        "eos_margin": eos_margin,
    }
    try:
        files, vocabulary, lm, config = _setup_decode(
            emissions_dir, vocab_path, lm_spec, preset, config_path, timeout_s, overrides
        )
        ngram_model = lm.model if decoder_kind == "prefix" and hasattr(lm, "model") else None
        records = _decode_records(
            files, vocabulary, lm, config, decoder_kind, workers, ngram_model
        )
    except RemoteLmError as exc:
        click.echo(f"remote LM failure: {exc}", err=True)
        sys.exit(EXIT_REMOTE)
    except ConfigError as exc:
        _fail_config([str(exc)])
        return
    out = open(output_path, "w", encoding="utf-8") if output_path else sys.stdout
    try:
        for rec in records:
            out.write(json.dumps(rec, ensure_ascii=False) + "\n")
    finally:
        if output_path:
            out.close()


@main.command("align-dump")
@_with_decode_options
def cmd_align_dump(
    emissions_dir, vocab_path, lm_spec, preset, config_path, alpha, beta,
    beam_width, candidates_k, max_iterations, acoustic_floor, lookahead_frames,
    eos_margin, timeout_s, workers,
):
    """Decode and print per-token alignments: token start_ms end_ms loglik."""
    overrides = {
        "alpha": alpha, "beta": beta, "beam_width": beam_width,
        "candidates_k": candidates_k, "max_iterations": max_iterations,
        "acoustic_floor": acoustic_floor, "lookahead_frames": lookahead_frames,
        "eos_margin": eos_margin,
    }
    try:
        files, vocabulary, lm, config = _setup_decode(
            emissions_dir, vocab_path, lm_spec, preset, config_path, timeout_s, overrides
        )
    except RemoteLmError as exc:
        click.echo(f"remote LM failure: {exc}", err=True)
        sys.exit(EXIT_REMOTE)
    except ConfigError as exc:
        _fail_config([str(exc)])
        return
    from .aligner import align_token

    for path in files:
        matrix = _load_matrix(path)
        decoder = LlmBeamDecoder(lm, vocabulary, config)
        if hasattr(lm, "clear_cache"):
            lm.clear_cache()
        result = decoder.decode(matrix)
        best = result.best
        click.echo(f"# {path.stem}")
        start = 0
        for token_id in best.tokens:
            token = vocabulary[token_id]
            if token.is_eos:
                continue
            res = align_token(
                token.chars, start, matrix, window=config.lookahead_frames
            )
            start = res.end_frame
            surface = ("▁" if token.word_initial else "") + token.text
            click.echo(
                f"{surface}\t{res.start_frame * matrix.frame_duration_ms}"
                f"\t{res.end_frame * matrix.frame_duration_ms}"
                f"\t{res.log_likelihood:.4f}"
            )


def _read_utt_file(path: str) -> Dict[str, str]:
    table: Dict[str, str] = {}
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        if not raw.strip():
            continue
        if "\t" not in raw:
            raise DataMismatchError(f"{path}: line lacks utt_id<TAB>text: {raw!r}")
        utt_id, text = raw.split("\t", 1)
        table[utt_id] = text
    return table


@main.command("eval")
@click.argument("ref_file")
@click.argument("hyp_file")
@click.option("--acronyms", is_flag=True, help="Add acronym accuracy and WER splits.")
@click.option("--json", "json_path", default=None, help="Also write the report as JSON.")
def cmd_eval(ref_file, hyp_file, acronyms, json_path):
    """Score a hypothesis file against a reference file (utt_id<TAB>text)."""
    try:
        refs = _read_utt_file(ref_file)
        hyps = _read_utt_file(hyp_file)
    except (OSError, DataMismatchError) as exc:
        click.echo(str(exc), err=True)
        sys.exit(EXIT_DATA)
    missing = sorted(set(refs) - set(hyps))
    extra = sorted(set(hyps) - set(refs))
    if missing or extra:
        for utt in missing:
            click.echo(f"missing hypothesis for {utt}", err=True)
        for utt in extra:
            click.echo(f"hypothesis without reference: {utt}", err=True)
        sys.exit(EXIT_DATA)
    report = evaluate_corpus(refs, hyps, acronyms=acronyms)
    click.echo(f"WER   {report.wer:8.2f} %")
    click.echo(f"CER   {report.cer:8.2f} %")
    click.echo(
        f"edits S={report.edits.substitutions} I={report.edits.insertions} "
        f"D={report.edits.deletions}"
    )
    if acronyms:
        if report.acronym_accuracy is None:
            click.echo("acronym accuracy: n/a (no acronyms in references)")
        else:
            click.echo(f"acronym accuracy: {report.acronym_accuracy:.2f}")
            click.echo(f"WER with acronyms:    {report.wer_with_acronyms:.2f} %")
            if report.wer_without_acronyms is not None:
                click.echo(f"WER without acronyms: {report.wer_without_acronyms:.2f} %")
    if report.skipped_empty_reference:
        click.echo(
            f"warning: skipped {len(report.skipped_empty_reference)} utterance(s) "
            "with empty reference and non-empty hypothesis",
            err=True,
        )
    if json_path:
        payload = {
            "wer": report.wer,
            "cer": report.cer,
            "substitutions": report.edits.substitutions,
            "insertions": report.edits.insertions,
            "deletions": report.edits.deletions,
            "per_utterance": report.per_utterance,
            "acronym_accuracy": report.acronym_accuracy,
            "wer_with_acronyms": report.wer_with_acronyms,
            "wer_without_acronyms": report.wer_without_acronyms,
        }
        Path(json_path).write_text(json.dumps(payload, indent=2), encoding="utf-8")


@main.command("sweep")
@_with_decode_options
@click.option("--alpha-grid", required=True, help="Comma-separated alpha values.")
@click.option("--beta-grid", required=True, help="Comma-separated beta values.")
@click.option("--dev-ref", "dev_ref", required=True, help="Reference file for the dev set.")
@click.option("--surface", "surface_path", default=None, help="CSV output for the WER surface.")
def cmd_sweep(
    emissions_dir, vocab_path, lm_spec, preset, config_path, alpha, beta,
    beam_width, candidates_k, max_iterations, acoustic_floor, lookahead_frames,
    eos_margin, timeout_s, workers, alpha_grid, beta_grid, dev_ref, surface_path,
):
    """Grid-search alpha/beta on a dev set; report the argmin-WER pair."""
    try:
        alphas = [float(v) for v in alpha_grid.split(",") if v.strip()]
        betas = [float(v) for v in beta_grid.split(",") if v.strip()]
        if not alphas or not betas:
            raise ConfigError("alpha/beta grids must be non-empty")
        refs = _read_utt_file(dev_ref)
        overrides = {
            "beam_width": beam_width, "candidates_k": candidates_k,
            "max_iterations": max_iterations, "acoustic_floor": acoustic_floor,
            "lookahead_frames": lookahead_frames, "eos_margin": eos_margin,
            "alpha": None, "beta": None,
        }
        files, vocabulary, lm, base_config = _setup_decode(
            emissions_dir, vocab_path, lm_spec, preset, config_path, timeout_s, overrides
        )
    except RemoteLmError as exc:
        click.echo(f"remote LM failure: {exc}", err=True)
        sys.exit(EXIT_REMOTE)
    except ConfigError as exc:
        _fail_config([str(exc)])
        return
    except DataMismatchError as exc:
        click.echo(str(exc), err=True)
        sys.exit(EXIT_DATA)

    from dataclasses import replace as dc_replace

    rows: List[Tuple[float, float, float]] = []
    best: Optional[Tuple[float, float, float]] = None
    # The LM memoizes per-prefix candidates across grid points.
    for a in alphas:
        for b in betas:
            config = dc_replace(base_config, alpha=a, beta=b)
            records = _decode_records(files, vocabulary, lm, config, "llm", workers)
            hyps = {r["utt_id"]: r["text"] for r in records}
            report = evaluate_corpus(
                {u: refs[u] for u in hyps if u in refs}, hyps
            )
            rows.append((a, b, report.wer))
            if best is None or report.wer < best[2]:
                best = (a, b, report.wer)
    if surface_path:
        with open(surface_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["alpha", "beta", "wer"])
            writer.writerows(rows)
    click.echo(f"best alpha={best[0]} beta={best[1]} wer={best[2]:.2f}")


@main.command("synth")
@click.argument("spec_file")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out-dir", "out_dir", required=True)
@click.option("--sharpness", type=float, default=synthmod.DEFAULT_SHARPNESS, show_default=True)
def cmd_synth(spec_file, seed, out_dir, sharpness):
    """Render synthetic emissions and a reference file from a spec."""
    try:
        specs = synthmod.parse_synth_spec(
            Path(spec_file).read_text(encoding="utf-8").splitlines()
        )
    except (OSError, ConfigError) as exc:
        _fail_config([str(exc)])
        return
    alphabet = CharAlphabet.default()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ref_lines = []
    try:
        for spec in specs:
            matrix = synthmod.render_emissions(
                spec.text,
                alphabet,
                frames_per_char=spec.frames_per_char,
                temperature=spec.temperature,
                rng=synthmod.rng_for(seed, spec.utt_id),
                sharpness=sharpness,
            )
            save_emissions(matrix, out / f"{spec.utt_id}.ctce")
            ref_lines.append(f"{spec.utt_id}\t{spec.text}")
    except (ConfigError, LlmBeamError) as exc:
        _fail_config([str(exc)])
        return
    (out / "reference.tsv").write_text("\n".join(ref_lines) + "\n", encoding="utf-8")
    click.echo(f"wrote {len(specs)} utterances to {out}")


if __name__ == "__main__":
    main()
