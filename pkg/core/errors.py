"""ラボ共通の例外定義

数値検証で発生するエラーはすべて `LabError` を基底とします。
HTTP層とCLIはこの階層に基づいてステータスコード・終了コードを決めます。
"""
from typing import Any, Dict, Optional


class LabError(Exception):
    """ラボの基底例外"""

    def __init__(self, message: str, context: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.context = context or {}

    def to_dict(self) -> Dict[str, Any]:
        """レポート用の辞書表現"""
        return {"error": type(self).__name__, "message": self.message, **self.context}


class InvalidOrderError(LabError):
    """α < -1/2 のベッセル次数"""


class ProfileError(LabError):
    """プロファイル宣言の不備（ヒント欠落・未宣言の特異点など）"""


class NotGMOnGridError(LabError):
    """グリッド上で lhs > 0 かつ rhs = 0 となった"""


class BadBlockError(LabError):
    """good でないブロック番号 n が渡された"""


class WitnessNotFoundError(LabError):
    """グリッド解像度で符号区間の証拠が見つからない"""


class QuadratureError(LabError):
    """パネル予算内で許容誤差に到達しない"""


class DivergenceError(LabError):
    """広義積分がコーシー判定を満たさない"""


class NonConvergenceError(LabError):
    """スティルチェス積分・恒等式の片側が収束しない"""


class UnboundedError(LabError):
    """ヒントが増大を示す（上限が有限でない）"""


class StabilizationError(LabError):
    """S_α の裾包絡が x_max までに安定しない"""


class UnknownEntryError(LabError):
    """ギャラリーに存在しない名前"""


class ConfigError(LabError):
    """設定ファイル・CLI引数の誤り"""
