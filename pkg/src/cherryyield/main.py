from cherryyield.cli import YieldCLI


def main():
    cli = YieldCLI()
    cli.run()


if __name__ == "__main__":  # pragma: no cover
    main()
