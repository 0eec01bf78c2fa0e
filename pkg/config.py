"""
エンジン設定

環境変数（.env 対応）から読み込む設定値とロギングの初期化
"""

import logging
import os

from dotenv import load_dotenv
from rich.console import Console
from rich.logging import RichHandler

# 環境変数を読み込み
load_dotenv()


class EngineConfig:
    """エンジン設定"""

    LOG_LEVEL = os.getenv("READING_ORDER_LOG_LEVEL", "INFO")
    MODEL_PATH = os.getenv("READING_ORDER_MODEL_PATH", "")
    EXTERNAL_COMPARATOR = os.getenv("READING_ORDER_EXTERNAL_COMPARATOR", "")
    EXTERNAL_TIMEOUT = float(os.getenv("READING_ORDER_EXTERNAL_TIMEOUT", "10.0"))
    WORKERS = int(os.getenv("READING_ORDER_WORKERS", "4"))
    HASH_WIDTH = int(os.getenv("READING_ORDER_HASH_WIDTH", "256"))
    # HTTP API の CORS 許可 origin（カンマ区切り、* は全許可で credentials なし）
    CORS_ORIGINS = [o.strip() for o in os.getenv("READING_ORDER_CORS_ORIGINS", "*").split(",") if o.strip()]

    # 走査パターン分類の閾値
    PATTERN_BACKTRACK = float(os.getenv("READING_ORDER_PATTERN_BACKTRACK", "0.25"))
    PATTERN_HUB_SHARE = float(os.getenv("READING_ORDER_PATTERN_HUB_SHARE", "0.5"))
    PATTERN_REVISIT = float(os.getenv("READING_ORDER_PATTERN_REVISIT", "0.2"))
    PATTERN_ENTROPY = float(os.getenv("READING_ORDER_PATTERN_ENTROPY", "0.6"))
    PATTERN_EAST_SHARE = float(os.getenv("READING_ORDER_PATTERN_EAST_SHARE", "0.5"))


def configure_logging(level: str = EngineConfig.LOG_LEVEL) -> None:
    """
    ルートロガーに RichHandler を設定

    Args:
        level: ログレベル名（DEBUG, INFO, ...）
    """
    logging.basicConfig(
        level=level.upper(),
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=Console(stderr=True), rich_tracebacks=True, show_path=False)],
        force=True,
    )
