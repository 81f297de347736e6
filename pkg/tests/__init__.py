# Enables importing from tests package if needed.

