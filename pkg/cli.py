"""
コマンドラインインターフェース

align / order / train / eval / render / synth / stats / anls の各サブコマンド

使用方法:
    python cli.py synth --pattern normal_z --docs 50 --seed 7 --out corpus/
    python cli.py order --strategy z-order --in doc.json --out order.json
    python cli.py eval --pred order.json --gold doc.json
"""

import json
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from pathlib import Path
from typing import Dict, List, Optional

import typer
from rich.console import Console
from rich.markup import escape

from comparator import load_model, save_model, train as train_model
from config import EngineConfig, configure_logging
from errors import EmptyInputError, ReadingOrderError, SchemaError
from gaze import consolidate, gold_pipeline
from metrics import EvaluationItem, corpus_anls, evaluate_corpus
from preorder import STRATEGIES, StrategyConfig, order_with_strategy
from render import render_svg
from reports import corpus_stats, report_table, stats_table
from schemas import (
    MISSING,
    AlignmentConfig,
    ReadingPattern,
    ReadingSequence,
    Regime,
    RenderStyle,
    SynthSpec,
    TrainingParams,
)
from storage import (
    FORMATS,
    ORDER_SUFFIX,
    IngestedDocument,
    gaze_path_for,
    ingest,
    load_order,
    load_trajectory,
    write_document,
    write_order,
    write_trajectory,
)
from synth import synth_corpus

app = typer.Typer(help="OCR ボックスの読み順エンジン", no_args_is_help=True, add_completion=False)
console = Console()
err_console = Console(stderr=True)


@contextmanager
def diagnostics():
    """ドメイン例外と入出力エラーを 1 行の診断メッセージと終了コード 1 に変換"""
    try:
        yield
    except (ReadingOrderError, OSError, ValueError) as e:
        err_console.print(f"[bold red]error:[/bold red] {escape(str(e))}", highlight=False, soft_wrap=True)
        raise typer.Exit(code=1)


def _check_format(format: str) -> None:
    if format not in FORMATS:
        raise ValueError(f"unknown format '{format}' (choose from {', '.join(FORMATS)})")


def _model_path(model: Optional[Path]) -> Optional[Path]:
    """--model がなければ READING_ORDER_MODEL_PATH"""
    if model is not None:
        return model
    return Path(EngineConfig.MODEL_PATH) if EngineConfig.MODEL_PATH else None


def _run_pool(func, items, workers: int) -> list:
    if workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(func, items))
    return [func(item) for item in items]


@app.callback()
def main_callback(
    log_level: str = typer.Option(EngineConfig.LOG_LEVEL, "--log-level", help="ログレベル"),
):
    """ログ設定"""
    configure_logging(log_level)


# ===== align =====

@app.command()
def align(
    doc: Path = typer.Option(..., "--doc", help="ドキュメントファイルまたはディレクトリ"),
    gaze: Optional[List[Path]] = typer.Option(None, "--gaze", help="視線ファイル（複数指定で統合）"),
    out: Path = typer.Option(..., "--out", help="gold_order を含むドキュメントの出力先"),
    radius: Optional[float] = typer.Option(None, "--radius", min=0, help="周辺判定の半径（px）"),
    reach: Optional[float] = typer.Option(None, "--reach", min=0, help="欠損補完の到達距離（px）"),
    raw: bool = typer.Option(False, "--raw", help="重複除去と欠損補完を行わない生の視線順"),
    no_repair: bool = typer.Option(False, "--no-repair", help="欠損補完を行わない"),
    workers: int = typer.Option(EngineConfig.WORKERS, "--workers", min=1, help="並列数"),
):
    """視線軌跡から gold 読み順を作成"""
    with diagnostics():
        cfg = AlignmentConfig(
            periphery_radius=radius,
            repair_reach=reach,
            dedupe=not raw,
            repair=not (raw or no_repair),
        )
        documents = ingest(doc)
        if doc.is_dir() and gaze:
            raise ValueError("--gaze can only be given with a single --doc file")

        def build(item: IngestedDocument):
            gaze_files = gaze if gaze else [gaze_path_for(item.path)]
            sequences = [gold_pipeline(item.document, load_trajectory(g), cfg).sequence for g in gaze_files]
            gold = consolidate(sequences)
            target = out / item.path.name if doc.is_dir() else out
            write_document(target, item.document, gold)
            missing = sum(1 for v in gold.order.values() if v == MISSING)
            return item.document.doc_id, missing, len(item.document.boxes)

        for doc_id, missing, total in _run_pool(build, documents, workers):
            console.print(f"{doc_id}: {missing}/{total} box(es) without gaze")


# ===== order =====

@app.command()
def order(
    strategy: str = typer.Option("z-order", "--strategy", help=f"戦略（{', '.join(STRATEGIES)}）"),
    input_path: Path = typer.Option(..., "--in", help="ドキュメントファイルまたはディレクトリ"),
    out: Path = typer.Option(..., "--out", help="順序ファイルまたは出力ディレクトリ"),
    format: str = typer.Option("canonical", "--format", help="入力形式（canonical, doctrack）"),
    model: Optional[Path] = typer.Option(None, "--model", help="比較モデル（model 戦略）"),
    external: Optional[str] = typer.Option(
        None, "--external", help="外部比較器コマンド（既定は READING_ORDER_EXTERNAL_COMPARATOR）"
    ),
    y_threshold: Optional[float] = typer.Option(None, "--y-threshold", min=0, help="Z-order の行閾値（px）"),
    cache: bool = typer.Option(False, "--cache", help="比較結果をキャッシュ"),
    early_exit: bool = typer.Option(False, "--early-exit", help="スワップのないパスで打ち切る"),
    merge: bool = typer.Option(False, "--merge", help="マージソートで並べ替える"),
    workers: int = typer.Option(EngineConfig.WORKERS, "--workers", min=1, help="並列数"),
):
    """読み順を生成して順序ファイルに書き出し"""
    with diagnostics():
        _check_format(format)
        if strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy '{strategy}' (choose from {', '.join(STRATEGIES)})")
        model_path = _model_path(model)
        config = StrategyConfig(
            y_threshold=y_threshold,
            model=load_model(model_path) if strategy == "model" and model_path else None,
            external_command=external,
            cache=cache,
            early_exit=early_exit,
            merge=merge,
        )
        documents = ingest(input_path, format)

        def run(item: IngestedDocument) -> Path:
            sequence, _ = order_with_strategy(item.document, strategy, config)
            target = out / f"{item.document.doc_id}{ORDER_SUFFIX}" if input_path.is_dir() else out
            write_order(target, item.document, strategy, sequence)
            return target

        written = _run_pool(run, documents, workers)
        console.print(f"wrote {len(written)} order file(s)")


# ===== train =====

@app.command()
def train(
    corpus: Path = typer.Option(..., "--corpus", help="gold_order を含むコーパス"),
    out: Path = typer.Option(..., "--out", help="モデルの出力先（JSON）"),
    regime: Regime = typer.Option(Regime.BOX, "--regime", help="特徴量レジーム"),
    format: str = typer.Option("canonical", "--format", help="入力形式（canonical, doctrack）"),
    epochs: int = typer.Option(200, "--epochs", min=1),
    learning_rate: float = typer.Option(0.5, "--lr", min=0),
    batch_size: Optional[int] = typer.Option(64, "--batch-size", min=1, help="ミニバッチサイズ"),
    full_batch: bool = typer.Option(False, "--full-batch", help="フルバッチ勾配降下"),
    l2: float = typer.Option(0.0, "--l2", min=0),
    window: Optional[int] = typer.Option(None, "--window", min=1, help="序数差がこの値以下のペアに限定"),
    holdout: float = typer.Option(0.2, "--holdout", min=0, max=0.99),
    hash_width: int = typer.Option(EngineConfig.HASH_WIDTH, "--hash-width", min=1),
    shuffle_labels: bool = typer.Option(False, "--shuffle-labels", help="ラベルを並べ替えた対照実験"),
    seed: int = typer.Option(0, "--seed"),
):
    """gold 順序からロジスティック比較モデルを学習"""
    with diagnostics():
        _check_format(format)
        data = [(item.document, item.gold) for item in ingest(corpus, format) if item.gold is not None]
        if not data:
            raise EmptyInputError(f"{corpus}: no document with gold_order")
        params = TrainingParams(
            epochs=epochs,
            learning_rate=learning_rate,
            batch_size=None if full_batch else batch_size,
            l2=l2,
            seed=seed,
            window=window,
            holdout_fraction=holdout,
            hash_width=hash_width,
            shuffle_labels=shuffle_labels,
        )
        model = train_model(data, regime, params)
        save_model(model, out)
        accuracy = "n/a" if model.heldout_accuracy is None else f"{model.heldout_accuracy:.4f}"
        console.print(f"loss {model.final_loss:.4f}, held-out pair accuracy {accuracy} -> {out}")


# ===== eval =====

def _load_predictions(pred: Path, documents: Dict[str, IngestedDocument]) -> Dict[str, ReadingSequence]:
    files = [pred] if pred.is_file() else sorted(pred.rglob(f"*{ORDER_SUFFIX}"))
    predictions: Dict[str, ReadingSequence] = {}
    for file in files:
        doc_id = load_order(file).doc_id
        if doc_id not in documents:
            raise SchemaError(str(file), "doc_id", f"no gold document '{doc_id}'")
        predictions[doc_id] = load_order(file, documents[doc_id].document).sequence
    return predictions


@app.command("eval")
def evaluate(
    gold: Path = typer.Option(..., "--gold", help="gold_order を含むドキュメントまたはディレクトリ"),
    pred: Optional[Path] = typer.Option(None, "--pred", help="順序ファイルまたはディレクトリ"),
    strategy: Optional[str] = typer.Option(None, "--strategy", help="--pred の代わりにその場で並べ替える戦略"),
    model: Optional[Path] = typer.Option(None, "--model", help="比較モデル（model 戦略）"),
    format: str = typer.Option("canonical", "--format", help="入力形式（canonical, doctrack）"),
    micro: bool = typer.Option(False, "--micro", help="ペアをプールした集計"),
    report: Optional[Path] = typer.Option(None, "--report", help="レポート JSON の出力先"),
    workers: int = typer.Option(EngineConfig.WORKERS, "--workers", min=1, help="並列数"),
):
    """予測順序を gold 順序と比較（τ, ρ, 欠損率）"""
    with diagnostics():
        _check_format(format)
        if (pred is None) == (strategy is None):
            raise ValueError("give exactly one of --pred or --strategy")

        documents = {item.document.doc_id: item for item in ingest(gold, format) if item.gold is not None}
        if not documents:
            raise EmptyInputError(f"{gold}: no document with gold_order")

        if pred is not None:
            predictions = _load_predictions(pred, documents)
            name = load_order(pred).strategy if pred.is_file() else "pred"
        else:
            model_path = _model_path(model)
            config = StrategyConfig(model=load_model(model_path) if strategy == "model" and model_path else None)
            predictions = {
                doc_id: order_with_strategy(item.document, strategy, config)[0]
                for doc_id, item in documents.items()
            }
            name = strategy

        items = [
            EvaluationItem(document=documents[doc_id].document, gold=documents[doc_id].gold, pred=seq)
            for doc_id, seq in predictions.items()
        ]
        result = evaluate_corpus(items, strategy=name, micro=micro, max_workers=workers)
        console.print(report_table(result))
        if report is not None:
            report.parent.mkdir(parents=True, exist_ok=True)
            report.write_text(result.model_dump_json(indent=2) + "\n", encoding="utf-8")


# ===== render =====

@app.command()
def render(
    doc: Path = typer.Option(..., "--doc", help="ドキュメントファイル"),
    out: Path = typer.Option(..., "--out", help="SVG の出力先"),
    order_file: Optional[Path] = typer.Option(None, "--order", help="順序ファイル（省略時は gold_order）"),
    show_text: bool = typer.Option(False, "--show-text", help="ボックスのテキストを描く"),
    no_arrows: bool = typer.Option(False, "--no-arrows", help="矢印を描かない"),
):
    """読み順を SVG に描画"""
    with diagnostics():
        item = ingest(doc)[0]
        if order_file is not None:
            sequence = load_order(order_file, item.document).sequence
        elif item.gold is not None:
            sequence = item.gold
        else:
            raise EmptyInputError(f"{doc}: no gold_order and no --order given")
        style = RenderStyle(show_text=show_text, show_arrows=not no_arrows)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_bytes(render_svg(item.document, sequence, style))
        console.print(f"wrote {out}")


# ===== synth =====

@app.command()
def synth(
    out: Path = typer.Option(..., "--out", help="出力ディレクトリ"),
    pattern: ReadingPattern = typer.Option(ReadingPattern.NORMAL_Z, "--pattern", help="読みパターン"),
    docs: int = typer.Option(1, "--docs", min=1, help="生成件数"),
    seed: int = typer.Option(0, "--seed"),
    rows: int = typer.Option(3, "--rows", min=1),
    cols: int = typer.Option(4, "--cols", min=1),
    lines_per_cell: int = typer.Option(3, "--lines-per-cell", min=1),
    jitter: float = typer.Option(0.0, "--jitter", min=0, help="視線の雑音（標準偏差 px）"),
    layout_jitter: float = typer.Option(0.0, "--layout-jitter", min=0, help="ボックスの y 方向の揺らぎ（px）"),
    dropout: float = typer.Option(0.0, "--dropout", min=0, max=1, help="注視されないボックスの割合"),
    returns: float = typer.Option(0.0, "--returns", min=0, max=1, help="再訪問の割合"),
    split: Optional[str] = typer.Option(None, "--split", help="分割名（train, test など）"),
):
    """合成コーパスを生成（ドキュメントと視線ファイル）"""
    with diagnostics():
        spec = SynthSpec(
            pattern=pattern,
            rows=rows,
            cols=cols,
            lines_per_cell=lines_per_cell,
            jitter_px=jitter,
            layout_jitter_px=layout_jitter,
            dropout_rate=dropout,
            return_rate=returns,
            seed=seed,
            split=split,
        )
        for result in synth_corpus(spec, docs):
            doc_path = out / f"{result.document.doc_id}.json"
            write_document(doc_path, result.document, result.gold)
            write_trajectory(gaze_path_for(doc_path), result.trajectory)
        console.print(f"wrote {docs} document(s) to {out}")


# ===== stats =====

@app.command()
def stats(
    corpus: Path = typer.Option(..., "--corpus", help="コーパスのファイルまたはディレクトリ"),
    format: str = typer.Option("canonical", "--format", help="入力形式（canonical, doctrack）"),
    output: Optional[Path] = typer.Option(None, "--json", help="統計 JSON の出力先"),
):
    """分割・サブセット別のドキュメント数・エンティティ数・トークン数"""
    with diagnostics():
        _check_format(format)
        result = corpus_stats([item.document for item in ingest(corpus, format)])
        console.print(stats_table(result))
        if output is not None:
            output.write_text(result.model_dump_json(indent=2) + "\n", encoding="utf-8")


# ===== anls =====

@app.command()
def anls(
    corpus: Path = typer.Option(..., "--corpus", help="qa を含むコーパス"),
    answers: Path = typer.Option(..., "--answers", help='予測解答 JSON（{"doc_id": ["解答", ...]}）'),
    threshold: float = typer.Option(0.5, "--threshold", min=0, max=1),
):
    """質問応答の予測解答をコーパス単位の ANLS で評価"""
    with diagnostics():
        predicted = json.loads(answers.read_text(encoding="utf-8"))
        preds, golds = [], []
        for item in ingest(corpus):
            doc_answers = predicted.get(item.document.doc_id, [])
            for k, qa in enumerate(item.document.qa_pairs):
                preds.append(doc_answers[k] if k < len(doc_answers) else "")
                golds.append(list(qa.answers))
        score = corpus_anls(preds, golds, threshold)
        console.print(f"ANLS {score:.4f} over {len(preds)} question(s)")


def main() -> None:
    app()


if __name__ == "__main__":
    main()
