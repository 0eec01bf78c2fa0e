"""
テストパッケージ
"""
