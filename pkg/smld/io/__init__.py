"""Reading and writing systems, varieties, orbit tables and run archives."""
