import uvicorn
import sys
import os

sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from inverse_erm.config import load_service_settings

if __name__ == "__main__":
    settings = load_service_settings()
    uvicorn.run("inverse_erm.main:app", host=settings.host, port=settings.port, reload=True)
