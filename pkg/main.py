"""
FastAPI メインアプリケーション

読み順エンジンを HTTP で公開するアプリケーション
"""

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

from config import EngineConfig, configure_logging
from routers import alignment, evaluation, ordering, rendering

configure_logging(EngineConfig.LOG_LEVEL)

# FastAPIアプリケーション作成
app = FastAPI(
    title="読み順エンジン",
    description="OCR ボックスの読み順生成・視線からの gold 作成・評価",
    version="1.0.0",
    docs_url="/docs",
    redoc_url="/redoc"
)

# CORS設定
app.add_middleware(
    CORSMiddleware,
    allow_origins=EngineConfig.CORS_ORIGINS,
    # ワイルドカードの origin とは併用できない
    allow_credentials="*" not in EngineConfig.CORS_ORIGINS,
    allow_methods=["*"],
    allow_headers=["*"],
)

# ルーター登録
app.include_router(ordering.router, prefix="/api")
app.include_router(alignment.router, prefix="/api")
app.include_router(evaluation.router, prefix="/api")
app.include_router(rendering.router, prefix="/api")


# ===== ヘルスチェック =====

@app.get("/health", summary="ヘルスチェック")
async def health_check():
    """サーバーのヘルスチェック"""
    return {"status": "healthy", "message": "Reading order engine is running"}


if __name__ == "__main__":
    import uvicorn
    uvicorn.run(
        "main:app",
        host="0.0.0.0",
        port=8000,
        reload=True
    )
