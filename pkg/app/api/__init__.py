"""FastAPI 엔드포인트"""
