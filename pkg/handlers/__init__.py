"""One module per subcommand; each exposes run_trial(config, seed, trial_dir)."""
