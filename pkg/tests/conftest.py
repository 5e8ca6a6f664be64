def pytest_addoption(parser):
    parser.addoption("--large", action="store_true", default=False,
                     help="also run the n in {128, 256} study tail")
