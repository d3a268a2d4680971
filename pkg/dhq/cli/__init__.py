from .dhq_cli import CLIError, HistoriesCLI, Settings, app
