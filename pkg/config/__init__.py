# Intentionally left blank for package initialization.

