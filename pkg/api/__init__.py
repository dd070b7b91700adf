"""HTTP ルーター"""
