"""コアモジュール - 共通ロジック（設定・エラー・レポート出力）"""
