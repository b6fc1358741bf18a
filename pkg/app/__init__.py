"""애플리케이션 레이어 - CLI 및 HTTP API"""
