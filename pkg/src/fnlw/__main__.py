from fnlw.cli.main import main

raise SystemExit(main())
