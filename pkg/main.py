"""FastAPI アプリケーションのメインエントリーポイント"""
from fastapi import FastAPI

from api.bessel import router as bessel_router
from api.gallery import router as gallery_router
from api.gm import router as gm_router
from api.reports import router as reports_router
from api.series import router as series_router
from api.transforms import router as transforms_router

app = FastAPI(
    title="GM Hankel Lab API",
    description="GM 関数のハンケル変換・余弦級数の数値検証ラボ",
    version="0.1.0",
)

# ルーターを登録
app.include_router(bessel_router)
app.include_router(gm_router)
app.include_router(transforms_router)
app.include_router(series_router)
app.include_router(gallery_router)
app.include_router(reports_router)


@app.get("/")
async def root():
    """ルートエンドポイント"""
    return {
        "message": "GM Hankel Lab API",
        "status": "running",
        "endpoints": {
            "bessel": "/bessel",
            "gm": "/gm",
            "transforms": "/transforms",
            "series": "/series",
            "gallery": "/gallery",
            "reports": "/reports",
        },
    }


if __name__ == "__main__":
    import uvicorn
    uvicorn.run(app, host="0.0.0.0", port=8000)
