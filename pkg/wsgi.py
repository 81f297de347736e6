from pathlib import Path

from dotenv import load_dotenv

# Workers may start outside the project root; the .env next to this file wins.
env_path = Path(__file__).resolve().parent / ".env"
if env_path.exists():
    load_dotenv(env_path, override=True)
else:
    load_dotenv(override=True)

from app import create_app  # noqa: E402
from config.settings import get_settings  # noqa: E402

app = create_app()

if __name__ == "__main__":
    settings = get_settings()
    app.run(host=settings.API_HOST, port=settings.API_PORT, debug=settings.LOG_LEVEL == "DEBUG")
