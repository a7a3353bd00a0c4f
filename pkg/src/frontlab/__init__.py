"""Front-speed laboratory for the G-equation in periodic flows."""
