"""数値検証モジュール - ベッセル関数・GM 条件・ハンケル変換・余弦級数・ギャラリー"""
